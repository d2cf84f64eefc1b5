"""Plain-text status records for cluster jobs.

The format matches the long form that batch schedulers print: a header
line ``Job Id: <id>`` followed by indented ``name = value`` attribute
lines. ``format_records`` and ``parse_records`` round-trip exactly, so
the text form can serve as a wire format for status polling.
"""

from __future__ import annotations

from dataclasses import dataclass, field

_INDENT = "    "

# Single-letter state codes, in display order.
STATE_CODES = {
    "Queued": "Q",
    "Held": "H",
    "Running": "R",
    "Suspended": "S",
    "Exited": "C",
    "Killed": "C",
}


def format_duration(seconds: int) -> str:
    """Render whole seconds as HH:MM:SS (hours may exceed two digits)."""
    seconds = max(0, int(seconds))
    h, rem = divmod(seconds, 3600)
    m, s = divmod(rem, 60)
    return f"{h:02d}:{m:02d}:{s:02d}"


def parse_duration(text: str) -> int:
    h, m, s = text.split(":")
    return int(h) * 3600 + int(m) * 60 + int(s)


def format_kb(num_bytes: int) -> str:
    return f"{int(num_bytes) // 1024}kb"


def parse_kb(text: str) -> int:
    if not text.endswith("kb"):
        raise ValueError(f"expected a kb quantity, got {text!r}")
    return int(text[:-2]) * 1024


@dataclass
class StatusRecord:
    """One job's attributes, preserving insertion order for formatting."""

    job_id: str
    attributes: dict[str, str] = field(default_factory=dict)

    def get(self, name: str, default: str = "") -> str:
        return self.attributes.get(name, default)


def format_records(records: list[StatusRecord]) -> str:
    blocks = []
    for rec in records:
        lines = [f"Job Id: {rec.job_id}"]
        lines.extend(f"{_INDENT}{name} = {value}"
                     for name, value in rec.attributes.items())
        blocks.append("\n".join(lines))
    return "\n\n".join(blocks) + ("\n" if blocks else "")


def parse_records(text: str) -> list[StatusRecord]:
    records: list[StatusRecord] = []
    current: StatusRecord | None = None
    for line in text.splitlines():
        if not line.strip():
            continue
        if line.startswith("Job Id:"):
            current = StatusRecord(line[len("Job Id:"):].strip())
            records.append(current)
        elif current is not None and line.startswith(_INDENT) and " = " in line:
            name, value = line[len(_INDENT):].split(" = ", 1)
            current.attributes[name] = value
        else:
            raise ValueError(f"unparseable status line: {line!r}")
    return records
