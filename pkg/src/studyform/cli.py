"""Command line entry points.

``extract serve`` runs the HTTP service; ``batch`` drives the headless
extraction pipeline over a PDF directory; ``agree`` scores an LLM form
against a human one; ``tokens`` prints the request size estimate.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .agreement import Tier, aggregate_report, compare_forms, load_overlay
from .coding_form import (
    CellOrigin,
    VariableKind,
    load_form,
    load_form_file,
    save_form,
    variable_slug,
)
from .errors import StudyformError
from .llm_gateway import (
    MockTransport,
    RetryPolicy,
    build_request,
    execute_batch,
    get_profile,
    resolve_api_key,
)
from .llm_gateway.core import AuthMode
from .pdf_ingest import estimate_tokens, extract_text
from .persistence import atomic_write_bytes, atomic_write_text
from .response_parser import ParseStatus, parse
from .wire import master_prompt

_USABLE = (ParseStatus.STRICT, ParseStatus.LENIENT)


def _load_kinds_file(path: Path) -> dict[str, VariableKind]:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    return {
        variable_slug(int(col["index"])): VariableKind(col["kind"])
        for col in data.get("columns", [])
    }


def cmd_serve(args) -> int:
    import uvicorn

    from .service import ServiceConfig, create_app, load_config

    config = load_config(args.config) if args.config else ServiceConfig()
    if args.port is not None:
        config.port = args.port
    if args.data_dir is not None:
        config.data_dir = Path(args.data_dir)
    if config.ui_dir is None and Path("frontend/dist").is_dir():
        config.ui_dir = Path("frontend/dist")
    app = create_app(config)
    uvicorn.run(app, host=config.host, port=config.port, log_level="info")
    return 0


def cmd_batch(args) -> int:
    pdf_dir = Path(args.pdf_dir)
    pdf_paths = sorted(
        (p for p in pdf_dir.iterdir() if p.suffix.lower() == ".pdf"),
        key=lambda p: p.name,
    ) if pdf_dir.is_dir() else []
    if not pdf_paths:
        print(f"error: no PDF files in {pdf_dir}", file=sys.stderr)
        return 2

    form = load_form_file(args.form)
    profile = get_profile(args.provider)
    api_key = None
    if profile.auth is not AuthMode.NONE:
        api_key = resolve_api_key(profile)

    labeled_requests = []
    ingest_failures = {}
    for path in pdf_paths:
        label = path.name
        try:
            raw = path.read_bytes()
            doc = extract_text(raw, source_name=label)
            request = build_request(profile, form, doc, raw, model=args.model)
            labeled_requests.append((label, request))
        except StudyformError as exc:
            ingest_failures[label] = (exc.code, exc.message)

    transport = MockTransport() if profile.name == "mock" else None
    outcome = execute_batch(
        profile,
        labeled_requests,
        parallelism=args.parallelism,
        api_key=api_key,
        transport=transport,
        retry=RetryPolicy(max_retries=args.max_retries),
    )
    completions = {e.study_label: e for e in outcome.entries}

    failures = []
    results = load_form(save_form(form))  # independent copy, template rows kept
    for path in pdf_paths:
        label = path.name
        row = results.new_row(label)
        if label in ingest_failures:
            code, message = ingest_failures[label]
            failures.append({"study_label": label, "error_code": code, "message": message})
        else:
            entry = completions[label]
            if entry.ok:
                parsed = parse(entry.completion.text, results)
                for variable, proposal in zip(results.variables, parsed.proposals):
                    if proposal.parse_status in _USABLE:
                        cell = row.cells[variable.column_index]
                        cell.value = proposal.answer
                        cell.recorded = True
                        cell.origin = CellOrigin.LLM_ACCEPTED
            else:
                failures.append(
                    {
                        "study_label": label,
                        "error_code": entry.failure_code,
                        "message": entry.failure_reason,
                    }
                )
        results.rows.append(row)

    out_path = Path(args.out)
    atomic_write_bytes(out_path, save_form(results))
    manifest_path = out_path.with_name(out_path.name + ".failures.json")
    atomic_write_text(manifest_path, json.dumps(failures, indent=2))

    populated = len(pdf_paths) - len(failures)
    print(
        f"{populated}/{len(pdf_paths)} studies extracted -> {out_path} "
        f"({len(failures)} failures -> {manifest_path})"
    )
    return 1 if populated == 0 else 0


def cmd_agree(args) -> int:
    human = load_form_file(args.human)
    llm = load_form_file(args.llm)
    overlay = None
    if args.overlay:
        overlay = load_overlay(Path(args.overlay).read_bytes())
    kinds = _load_kinds_file(args.kinds) if args.kinds else None

    matrix = compare_forms(human, llm, overlay=overlay)
    reports = {
        tier.value: aggregate_report(matrix, tier, kinds=kinds) for tier in Tier
    }
    payload = {name: report.to_json_dict() for name, report in reports.items()}
    atomic_write_text(Path(args.report), json.dumps(payload, indent=2))
    for name, report in reports.items():
        print(report.render_table())
        print()
    print(f"report written to {args.report}")
    return 0


def cmd_tokens(args) -> int:
    form = load_form_file(args.form)
    doc = extract_text(Path(args.pdf).read_bytes(), source_name=Path(args.pdf).name)
    estimate = estimate_tokens(doc, form, master_prompt())
    print(f"estimated_tokens: {estimate.estimated_tokens}")
    print(f"document_tokens: {estimate.document_tokens}")
    print(f"prompt_tokens: {estimate.prompt_tokens}")
    print(f"method: {estimate.method}")
    return 0


def cmd_example_form(args) -> int:
    from importlib import resources

    content = (
        resources.files("studyform.data")
        .joinpath("default_coding_form.csv")
        .read_bytes()
    )
    atomic_write_bytes(Path(args.out), content)
    print(f"example coding form written to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="extract",
        description="LLM-assisted systematic-review data extraction workbench",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    serve = sub.add_parser("serve", help="run the review service")
    serve.add_argument("--config", type=Path, default=None, help="JSON config file")
    serve.add_argument("--port", type=int, default=None)
    serve.add_argument("--data-dir", type=Path, default=None)
    serve.set_defaults(func=cmd_serve)

    batch = sub.add_parser("batch", help="extract a directory of PDFs into a form")
    batch.add_argument("--form", type=Path, required=True)
    batch.add_argument("--pdf-dir", type=Path, required=True)
    batch.add_argument("--provider", required=True)
    batch.add_argument("--model", required=True)
    batch.add_argument("--out", type=Path, required=True)
    batch.add_argument("--parallelism", type=int, default=1)
    batch.add_argument("--max-retries", type=int, default=3)
    batch.set_defaults(func=cmd_batch)

    agree = sub.add_parser("agree", help="score an LLM form against a human form")
    agree.add_argument("--human", type=Path, required=True)
    agree.add_argument("--llm", type=Path, required=True)
    agree.add_argument("--overlay", type=Path, default=None)
    agree.add_argument("--kinds", type=Path, default=None)
    agree.add_argument("--report", type=Path, required=True)
    agree.set_defaults(func=cmd_agree)

    tokens = sub.add_parser("tokens", help="estimate request tokens for one PDF")
    tokens.add_argument("--form", type=Path, required=True)
    tokens.add_argument("--pdf", type=Path, required=True)
    tokens.set_defaults(func=cmd_tokens)

    example = sub.add_parser("example-form", help="write the bundled example form")
    example.add_argument("--out", type=Path, required=True)
    example.set_defaults(func=cmd_example_form)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except StudyformError as exc:
        print(f"error [{exc.code}]: {exc.message}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
