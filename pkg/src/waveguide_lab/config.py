"""Flat ``key = value`` campaign configs with one section per command.

::

    [campaign]
    id = smoke

    [bilinear-sweep]
    lam = [1, 2]
    N1 = [16, 32]
    draws = 5

Values are numbers, booleans, bare strings, or explicit bracketed lists.
Every schema violation is collected with its line number.
"""

from __future__ import annotations

from dataclasses import dataclass, field

COMMANDS = ("selftest", "bilinear-sweep", "measure-sweep", "extremizer-check", "nls-run", "report")

# type tags: int, float, bool, str, [int], [float], [str]; None default means "unset"
SCHEMA = {
    "campaign": {"id": ("str", "campaign"), "assert": ("bool", True)},
    "selftest": {
        "cases": ("int", 100), "nx": ("int", 512), "ny": ("int", 128), "lam": ("float", 2.0),
        "tol": ("float", 1e-10), "unitary_tol": ("float", 1e-12),
    },
    "bilinear-sweep": {
        "estimate": ("str", "angular"),
        "lam": ("[float]", [1.0]), "N1": ("[float]", [16.0]), "N2": ("[float]", [4.0]),
        "M": ("[float]", [4.0]), "theta": ("[float]", [0.125]),
        "eps": ("float", 0.1), "slabs": ("int", 8),
        "draws": ("int", 5), "half_j": ("int", 2), "half_k": ("int", 2),
        "max_ratio": ("float", None), "drift_factor": ("float", None),
    },
    "measure-sweep": {
        "variants": ("[str]", ["M_FULL", "M1_NO_ANGLE", "M_TILDE"]),
        "lam": ("[float]", [1.0]), "N1": ("[float]", [16.0]), "N2": ("[float]", [8.0]),
        "M": ("[float]", [4.0]), "theta": ("[float]", [0.125]),
        "n_random": ("int", 4), "grazing": ("bool", True),
        "max_ratio": ("float", None), "drift_factor": ("float", None),
    },
    "extremizer-check": {
        "lam": ("[float]", [1.0]), "N1": ("[float]", [64.0]), "N2": ("[float]", [8.0]),
        "theta": ("[float]", [2.0**-6]),
        "c_low": ("float", None), "c_high": ("float", None),
    },
    "nls-run": {
        "s": ("float", 0.6), "N": ("[float]", [8.0, 16.0]), "delta": ("float", 0.5), "c": ("float", 1.0),
        "nx": ("int", 256), "ny": ("int", 32), "L": ("float", 8.0), "decay": ("float", 2.0),
        "amplitude": ("float", 1.0), "snapshots": ("int", 129), "dt_fraction": ("float", 0.5),
        "checkpoints": ("int", 5), "b": ("float", 0.6),
        "max_gap_slope": ("float", None), "max_increment_slope": ("float", None),
    },
    "report": {"input": ("str", None)},
}


class ConfigError(ValueError):
    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("\n".join(self.problems))


@dataclass
class Config:
    sections: dict = field(default_factory=dict)
    text: str = ""

    def section(self, name: str) -> dict:
        """Section values merged over the schema defaults."""
        out = {k: d for k, (_, d) in SCHEMA[name].items()}
        out.update(self.sections.get(name, {}))
        return out


def _scalar(tok: str, tag: str):
    tok = tok.strip()
    if tag == "int":
        return int(tok)
    if tag == "float":
        return float(tok)
    if tag == "bool":
        low = tok.lower()
        if low in ("true", "yes", "1"):
            return True
        if low in ("false", "no", "0"):
            return False
        raise ValueError(f"not a boolean: {tok!r}")
    if not tok:
        raise ValueError("empty string")
    return tok.strip("\"'")


def _value(raw: str, tag: str):
    if tag.startswith("["):
        inner = tag[1:-1]
        raw = raw.strip()
        if not (raw.startswith("[") and raw.endswith("]")):
            raise ValueError("lists must be written explicitly as [a, b, ...]")
        body = raw[1:-1].strip()
        return [] if not body else [_scalar(t, inner) for t in body.split(",")]
    if raw.strip().startswith("["):
        raise ValueError("a scalar is expected here")
    return _scalar(raw, tag)


def parse_config(text: str, command: str | None = None) -> Config:
    """Parse and validate; raises ``ConfigError`` listing every problem."""
    problems = []
    sections: dict = {}
    cur = None
    seen = {}
    for n, line in enumerate(text.splitlines(), start=1):
        s = line.split("#", 1)[0].strip()
        if not s:
            continue
        if s.startswith("[") and s.endswith("]") and "=" not in s:
            name = s[1:-1].strip()
            if name not in SCHEMA:
                problems.append(f"line {n}: unknown section [{name}]")
                cur = None
                continue
            cur = name
            sections.setdefault(cur, {})
            continue
        if "=" not in s:
            problems.append(f"line {n}: expected 'key = value'")
            continue
        key, raw = (p.strip() for p in s.split("=", 1))
        if cur is None:
            problems.append(f"line {n}: key '{key}' outside a known section")
            continue
        if key not in SCHEMA[cur]:
            problems.append(f"line {n}: unknown key '{key}' in [{cur}]")
            continue
        if (cur, key) in seen:
            problems.append(f"line {n}: duplicate key '{key}' (first on line {seen[cur, key]})")
            continue
        seen[cur, key] = n
        tag = SCHEMA[cur][key][0]
        try:
            sections[cur][key] = _value(raw, tag)
        except ValueError as e:
            problems.append(f"line {n}: bad value for '{key}' ({tag}): {e}")
    if command is not None and command not in COMMANDS:
        problems.append(f"unknown command {command!r}")
    if problems:
        raise ConfigError(problems)
    return Config(sections, text)
