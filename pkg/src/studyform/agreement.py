"""LLM-vs-human coding agreement: simple agreement and Cohen's kappa,
at exact and adjudicated-accurate tiers, split by variable kind.

All proportions are computed in exact rational arithmetic; percentages
are rendered to two decimals only at the reporting edge.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from enum import Enum
from fractions import Fraction
from typing import Iterable, Optional

from .coding_form import CodingForm, VariableKind
from .errors import EmptyColumn, EmptySelection, SchemaMismatch, UnalignedStudies

logger = logging.getLogger(__name__)

DEFAULT_SYNONYMS = {
    "nr": "not reported",
    "not stated": "not reported",
    "n/r": "not reported",
}


@dataclass(frozen=True)
class NormalizationPolicy:
    case_fold: bool = True
    collapse_whitespace: bool = True
    synonym_table: dict[str, str] = field(
        default_factory=lambda: dict(DEFAULT_SYNONYMS)
    )


def normalize(value: str, policy: Optional[NormalizationPolicy] = None) -> str:
    """Trim, collapse whitespace, case-fold, then substitute synonyms.

    Idempotent: synonym targets are themselves in normal form.
    """
    policy = policy or NormalizationPolicy()
    out = value.strip()
    if policy.collapse_whitespace:
        out = " ".join(out.split())
    if policy.case_fold:
        out = out.casefold()
    return policy.synonym_table.get(out, out)


class Verdict(str, Enum):
    EXACT = "exact"
    ACCURATE = "accurate"
    MISMATCH = "mismatch"
    MISSING_LLM = "missing_llm"


class Tier(str, Enum):
    EXACT_ONLY = "exact_only"
    EXACT_PLUS_ACCURATE = "exact_plus_accurate"


_TIER_HITS = {
    Tier.EXACT_ONLY: frozenset({Verdict.EXACT}),
    Tier.EXACT_PLUS_ACCURATE: frozenset({Verdict.EXACT, Verdict.ACCURATE}),
}

AdjudicationOverlay = frozenset  # of (study_label, variable_id) pairs


@dataclass(frozen=True)
class ComparisonMatrix:
    """Cellwise verdicts over the human form's studies, plus the aligned
    raw value columns the kappa computation reuses."""

    study_labels: tuple[str, ...]
    variable_ids: tuple[str, ...]
    kinds: tuple[VariableKind, ...]
    verdicts: tuple[tuple[Verdict, ...], ...]  # [study][variable]
    human_values: tuple[tuple[str, ...], ...]  # raw, same shape
    llm_values: tuple[tuple[str, ...], ...]  # raw; "" where study missing
    llm_present: tuple[bool, ...]  # per study

    @property
    def total_cells(self) -> int:
        return len(self.study_labels) * len(self.variable_ids)


@dataclass(frozen=True)
class KappaResult:
    p_o: Fraction
    p_e: Fraction
    kappa: Optional[Fraction]  # None when p_e == 1 (degenerate marginals)
    n_items: int

    @property
    def undefined(self) -> bool:
        return self.kappa is None


def compare_forms(
    human: CodingForm,
    llm: CodingForm,
    overlay: Optional[Iterable[tuple[str, str]]] = None,
    policy: Optional[NormalizationPolicy] = None,
) -> ComparisonMatrix:
    """Verdict per human-form cell, joined to the LLM form by study label.

    Human studies with no LLM row score missing_llm in every cell; exact
    beats the adjudication overlay, which beats mismatch.
    """
    policy = policy or NormalizationPolicy()
    if len(human.variables) != len(llm.variables):
        raise SchemaMismatch(
            f"human form has {len(human.variables)} variables, "
            f"LLM form has {len(llm.variables)}"
        )
    for hv, lv in zip(human.variables, llm.variables):
        if hv.prompt != lv.prompt:
            logger.warning(
                "column %d prompts differ between forms; comparing by position",
                hv.column_index,
            )
            break

    def check_duplicates(form: CodingForm, side: str) -> None:
        seen: set[str] = set()
        for row in form.rows:
            if row.study_label in seen:
                raise UnalignedStudies(
                    f"{side} form repeats study label {row.study_label!r}"
                )
            seen.add(row.study_label)

    check_duplicates(human, "human")
    check_duplicates(llm, "LLM")
    llm_by_label = {row.study_label: row for row in llm.rows}
    overlay_set = frozenset(overlay or ())

    verdicts: list[tuple[Verdict, ...]] = []
    human_values: list[tuple[str, ...]] = []
    llm_values: list[tuple[str, ...]] = []
    llm_present: list[bool] = []
    for h_row in human.rows:
        l_row = llm_by_label.get(h_row.study_label)
        llm_present.append(l_row is not None)
        row_verdicts = []
        row_llm = []
        for variable in human.variables:
            h_val = h_row.cells[variable.column_index].value
            if l_row is None:
                row_verdicts.append(Verdict.MISSING_LLM)
                row_llm.append("")
                continue
            l_val = l_row.cells[variable.column_index].value
            row_llm.append(l_val)
            if normalize(h_val, policy) == normalize(l_val, policy):
                row_verdicts.append(Verdict.EXACT)
            elif (h_row.study_label, variable.id) in overlay_set:
                row_verdicts.append(Verdict.ACCURATE)
            else:
                row_verdicts.append(Verdict.MISMATCH)
        verdicts.append(tuple(row_verdicts))
        human_values.append(
            tuple(c.value for c in h_row.cells)
        )
        llm_values.append(tuple(row_llm))

    return ComparisonMatrix(
        study_labels=tuple(r.study_label for r in human.rows),
        variable_ids=tuple(v.id for v in human.variables),
        kinds=tuple(v.kind for v in human.variables),
        verdicts=tuple(verdicts),
        human_values=tuple(human_values),
        llm_values=tuple(llm_values),
        llm_present=tuple(llm_present),
    )


def simple_agreement(
    matrix: ComparisonMatrix,
    tier: Tier = Tier.EXACT_ONLY,
    kind_filter: Optional[VariableKind] = None,
) -> Fraction:
    """Proportion of cells whose verdict counts for the tier.

    missing_llm cells stay in the denominator, so absent studies always
    count against agreement.
    """
    hits = _TIER_HITS[tier]
    numerator = 0
    denominator = 0
    for row in matrix.verdicts:
        for j, verdict in enumerate(row):
            if kind_filter is not None and matrix.kinds[j] is not kind_filter:
                continue
            denominator += 1
            if verdict in hits:
                numerator += 1
    if denominator == 0:
        raise EmptySelection(
            "no cells left to score"
            + (f" for kind {kind_filter.value}" if kind_filter else "")
        )
    return Fraction(numerator, denominator)


def cohen_kappa(
    human_column: list[str],
    llm_column: list[str],
    policy: Optional[NormalizationPolicy] = None,
) -> KappaResult:
    """Chance-corrected agreement over one aligned pair of columns.

    p_e comes from the two coders' marginal distributions over the union
    of observed normalized categories; kappa is flagged undefined when
    p_e reaches 1 (both coders constant on one category).
    """
    if not human_column or not llm_column:
        raise EmptyColumn("kappa needs at least one aligned item pair")
    if len(human_column) != len(llm_column):
        raise EmptyColumn(
            f"column lengths differ: {len(human_column)} vs {len(llm_column)}"
        )
    policy = policy or NormalizationPolicy()
    h_norm = [normalize(v, policy) for v in human_column]
    l_norm = [normalize(v, policy) for v in llm_column]
    n = len(h_norm)
    matches = sum(1 for a, b in zip(h_norm, l_norm) if a == b)
    p_o = Fraction(matches, n)

    categories = set(h_norm) | set(l_norm)
    p_e = Fraction(0)
    for category in categories:
        h_marginal = Fraction(sum(1 for v in h_norm if v == category), n)
        l_marginal = Fraction(sum(1 for v in l_norm if v == category), n)
        p_e += h_marginal * l_marginal

    if p_e == 1:
        return KappaResult(p_o=p_o, p_e=p_e, kappa=None, n_items=n)
    return KappaResult(p_o=p_o, p_e=p_e, kappa=(p_o - p_e) / (1 - p_e), n_items=n)


def pct(fraction: Fraction) -> float:
    """Exact fraction to a percentage with two decimals, half-up."""
    value = Decimal(fraction.numerator * 100) / Decimal(fraction.denominator)
    return float(value.quantize(Decimal("0.01"), rounding=ROUND_HALF_UP))


@dataclass(frozen=True)
class KindSummary:
    kind: VariableKind
    agreement: Fraction
    cell_count: int


@dataclass(frozen=True)
class VariableSummary:
    variable_id: str
    kind: VariableKind
    agreement: Fraction
    kappa: KappaResult


@dataclass(frozen=True)
class AgreementReport:
    tier: Tier
    overall: Fraction
    total_cells: int
    per_kind: Optional[dict[VariableKind, KindSummary]]
    per_variable: list[VariableSummary]
    pooled_kappa: Optional[Fraction]
    defined_kappa_variables: int
    undefined_kappa_variables: int
    verdict_counts: dict[Verdict, int]
    warnings: list[str]

    KAPPA_POOLING = (
        "cell-count-weighted mean of per-variable kappas computed over the "
        "study axis; variables with undefined kappa excluded and counted"
    )

    def to_json_dict(self) -> dict:
        def frac(fr: Optional[Fraction]) -> Optional[dict]:
            if fr is None:
                return None
            return {
                "pct": pct(fr),
                "numerator": fr.numerator,
                "denominator": fr.denominator,
            }

        def kappa_dict(k: KappaResult) -> dict:
            return {
                "p_o": float(k.p_o),
                "p_e": float(k.p_e),
                "kappa": None if k.kappa is None else float(k.kappa),
                "undefined": k.undefined,
                "n_items": k.n_items,
            }

        return {
            "tier": self.tier.value,
            "total_cells": self.total_cells,
            "overall": frac(self.overall),
            "per_kind": (
                {
                    kind.value: {
                        "agreement": frac(s.agreement),
                        "cell_count": s.cell_count,
                    }
                    for kind, s in self.per_kind.items()
                }
                if self.per_kind is not None
                else None
            ),
            "pooled_kappa": {
                "value": None if self.pooled_kappa is None else float(self.pooled_kappa),
                "defined_variables": self.defined_kappa_variables,
                "undefined_variables": self.undefined_kappa_variables,
                "method": self.KAPPA_POOLING,
            },
            "per_variable": [
                {
                    "variable_id": v.variable_id,
                    "kind": v.kind.value,
                    "agreement": frac(v.agreement),
                    "kappa": kappa_dict(v.kappa),
                }
                for v in self.per_variable
            ],
            "verdict_counts": {k.value: c for k, c in self.verdict_counts.items()},
            "warnings": list(self.warnings),
        }

    def render_table(self) -> str:
        lines = [
            f"tier: {self.tier.value}",
            f"overall agreement: {pct(self.overall):.2f}% "
            f"({self.overall.numerator}/{self.overall.denominator})",
        ]
        if self.per_kind is not None:
            for kind in (VariableKind.EXPLICIT, VariableKind.DERIVED):
                if kind in self.per_kind:
                    s = self.per_kind[kind]
                    lines.append(
                        f"{kind.value:>9} agreement: {pct(s.agreement):.2f}% "
                        f"over {s.cell_count} cells"
                    )
        if self.pooled_kappa is not None:
            lines.append(
                f"pooled kappa: {float(self.pooled_kappa):.3f} "
                f"({self.defined_kappa_variables} defined, "
                f"{self.undefined_kappa_variables} undefined)"
            )
        else:
            lines.append("pooled kappa: undefined for every variable")
        header = f"{'variable':>10} {'kind':>12} {'agree%':>8} {'kappa':>8}"
        lines.append(header)
        for v in self.per_variable:
            kappa_text = "undef" if v.kappa.undefined else f"{float(v.kappa.kappa):.3f}"
            lines.append(
                f"{v.variable_id:>10} {v.kind.value:>12} "
                f"{pct(v.agreement):>8.2f} {kappa_text:>8}"
            )
        for warning in self.warnings:
            lines.append(f"warning: {warning}")
        return "\n".join(lines)


def _tier_adjusted_columns(
    matrix: ComparisonMatrix, j: int, tier: Tier
) -> tuple[list[str], list[str]]:
    """Aligned value columns for variable j; at the accurate tier,
    adjudicated cells count as agreement by substituting the human value."""
    human_col = []
    llm_col = []
    for i in range(len(matrix.study_labels)):
        h_val = matrix.human_values[i][j]
        l_val = matrix.llm_values[i][j]
        if (
            tier is Tier.EXACT_PLUS_ACCURATE
            and matrix.verdicts[i][j] is Verdict.ACCURATE
        ):
            l_val = h_val
        human_col.append(h_val)
        llm_col.append(l_val)
    return human_col, llm_col


def aggregate_report(
    matrix: ComparisonMatrix,
    tier: Tier = Tier.EXACT_ONLY,
    kinds: Optional[dict[str, VariableKind]] = None,
    policy: Optional[NormalizationPolicy] = None,
) -> AgreementReport:
    """Roll the verdict matrix up into kind splits, overall, and kappas.

    Overall is the exact cell-weighted combination of the kind agreements;
    with any variable still unspecified the kind split is omitted and a
    warning recorded instead.
    """
    policy = policy or NormalizationPolicy()
    effective_kinds = list(matrix.kinds)
    if kinds:
        for j, variable_id in enumerate(matrix.variable_ids):
            if variable_id in kinds:
                effective_kinds[j] = kinds[variable_id]
    adjusted = ComparisonMatrix(
        study_labels=matrix.study_labels,
        variable_ids=matrix.variable_ids,
        kinds=tuple(effective_kinds),
        verdicts=matrix.verdicts,
        human_values=matrix.human_values,
        llm_values=matrix.llm_values,
        llm_present=matrix.llm_present,
    )

    warnings: list[str] = []
    overall = simple_agreement(adjusted, tier)

    per_kind: Optional[dict[VariableKind, KindSummary]] = None
    if all(k is not VariableKind.UNSPECIFIED for k in effective_kinds):
        per_kind = {}
        for kind in (VariableKind.EXPLICIT, VariableKind.DERIVED):
            count = sum(1 for k in effective_kinds if k is kind)
            if count == 0:
                continue
            agreement = simple_agreement(adjusted, tier, kind_filter=kind)
            per_kind[kind] = KindSummary(
                kind=kind,
                agreement=agreement,
                cell_count=count * len(matrix.study_labels),
            )
    else:
        unspecified = [
            matrix.variable_ids[j]
            for j, k in enumerate(effective_kinds)
            if k is VariableKind.UNSPECIFIED
        ]
        warnings.append(
            "kind split omitted: variables without explicit/derived tags: "
            + ", ".join(unspecified)
        )

    per_variable: list[VariableSummary] = []
    hits = _TIER_HITS[tier]
    for j, variable_id in enumerate(matrix.variable_ids):
        column_verdicts = [row[j] for row in matrix.verdicts]
        agreement = Fraction(
            sum(1 for v in column_verdicts if v in hits), len(column_verdicts)
        )
        human_col, llm_col = _tier_adjusted_columns(adjusted, j, tier)
        per_variable.append(
            VariableSummary(
                variable_id=variable_id,
                kind=effective_kinds[j],
                agreement=agreement,
                kappa=cohen_kappa(human_col, llm_col, policy),
            )
        )

    defined = [v for v in per_variable if not v.kappa.undefined]
    undefined_count = len(per_variable) - len(defined)
    pooled: Optional[Fraction] = None
    if defined:
        weight_total = sum(v.kappa.n_items for v in defined)
        pooled = sum(
            (v.kappa.kappa * v.kappa.n_items for v in defined), start=Fraction(0)
        ) / weight_total

    verdict_counts = {v: 0 for v in Verdict}
    for row in matrix.verdicts:
        for verdict in row:
            verdict_counts[verdict] += 1

    return AgreementReport(
        tier=tier,
        overall=overall,
        total_cells=adjusted.total_cells,
        per_kind=per_kind,
        per_variable=per_variable,
        pooled_kappa=pooled,
        defined_kappa_variables=len(defined),
        undefined_kappa_variables=undefined_count,
        verdict_counts=verdict_counts,
        warnings=warnings,
    )


def load_overlay(content: bytes) -> AdjudicationOverlay:
    """Overlay file: comma-delimited study_label,variable_id pairs,
    optional header row."""
    import csv
    import io

    pairs: set[tuple[str, str]] = set()
    reader = csv.reader(io.StringIO(content.decode("utf-8-sig")))
    for i, row in enumerate(reader):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) < 2:
            raise SchemaMismatch(
                f"overlay row {i + 1} needs study_label and variable_id columns"
            )
        study, variable = row[0].strip(), row[1].strip()
        if i == 0 and (study, variable) == ("study_label", "variable_id"):
            continue
        pairs.add((study, variable))
    return frozenset(pairs)
