"""Wire format shared by the request builder and the response parser.

The master prompt instruction ships as a versioned template file; the
block grammar tokens here are the single source of truth for both sides.
"""

from __future__ import annotations

import re
from importlib import resources

MASTER_PROMPT_VERSION = "v1"


def master_prompt() -> str:
    """The fixed extraction instruction, verbatim from the template file."""
    return (
        resources.files("studyform.templates")
        .joinpath(f"master_prompt_{MASTER_PROMPT_VERSION}.txt")
        .read_text(encoding="utf-8")
    )


def block_open(i: int) -> str:
    return f"[Q{i}]"


def block_close(i: int) -> str:
    return f"[/Q{i}]"


def block_pattern(i: int) -> re.Pattern[str]:
    """Matches one [Qi]...[/Qi] block, lazily, across lines."""
    return re.compile(
        re.escape(block_open(i)) + r"(.*?)" + re.escape(block_close(i)), re.S
    )


ANSWER_LINE = re.compile(r"^[ \t]*ANSWER:[ \t]*(.*?)[ \t]*$", re.M)
PAGE_LINE = re.compile(r"^[ \t]*PAGE:[ \t]*(.*?)[ \t]*$", re.M)
REASON_LINE = re.compile(r"^[ \t]*REASON:[ \t]*(.*?)[ \t]*$", re.M)


def numbered_line_pattern(i: int) -> re.Pattern[str]:
    """Fallback grammar: 'i. answer (p. N)' or 'i) answer' on one line."""
    return re.compile(
        rf"^[ \t]*{i}[.)][ \t]+(.+?)"
        r"(?:[ \t]*\((?:p|pg|page)\.?[ \t]*(\d+)\))?[ \t]*$",
        re.M,
    )


def numbered_questions(prompts: list[str]) -> str:
    """Render form prompts as the numbered question list sent to the model."""
    return "\n".join(f"{i + 1}. {p}" for i, p in enumerate(prompts))
