"""Run reports: a `# key=value` header capturing the fully resolved
configuration, followed by an RFC-4180-style CSV body ('.' decimal, header
row, comma separator).

Reports are required to be byte-identical across repeated runs with the same
configuration and seed, so every written value must be a pure function of
(config, seed); floats are serialized with repr for exact round-tripping.
"""
from __future__ import annotations

from dataclasses import dataclass, field


def _format_value(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


@dataclass
class RunReport:
    header: dict
    columns: list
    rows: list = field(default_factory=list)

    def add_row(self, row):
        if set(row) != set(self.columns):
            missing = set(self.columns) - set(row)
            extra = set(row) - set(self.columns)
            raise ValueError(f"row columns mismatch (missing {missing}, "
                             f"extra {extra})")
        if self.rows and row["iteration"] <= self.rows[-1]["iteration"]:
            raise ValueError("rows must be strictly increasing in iteration")
        self.rows.append(dict(row))

    def to_string(self):
        lines = [f"# {k}={_format_value(v)}" for k, v in self.header.items()]
        lines.append(",".join(self.columns))
        for row in self.rows:
            lines.append(",".join(_format_value(row[c]) for c in self.columns))
        return "\n".join(lines) + "\n"

    def write(self, path):
        with open(path, "w", encoding="ascii", newline="\n") as fh:
            fh.write(self.to_string())
