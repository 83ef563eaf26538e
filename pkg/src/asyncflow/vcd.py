"""Value Change Dump export of simulation traces."""

from __future__ import annotations

from .eventsim import Trace


def _ident(i: int) -> str:
    # printable ASCII '!'..'~', little-endian base 94
    chars = []
    while True:
        chars.append(chr(33 + i % 94))
        i //= 94
        if not i:
            return "".join(chars)


def dumped_signals(t: Trace) -> list[str]:
    """Inputs, state bits and outputs, in that order, without repeats."""
    out: list[str] = []
    for name in (*t.inputs, *t.state_bits, *t.outputs):
        if name not in out:
            out.append(name)
    return out


def write_waveform(t: Trace, timescale: str = "1ns", scope: str = "top") -> bytes:
    """One 1-bit wire per signal; one time unit of the trace is one ``timescale`` step."""
    names = dumped_signals(t)
    ids = {n: _ident(i) for i, n in enumerate(names)}
    lines = [
        f"$timescale {timescale} $end",
        f"$scope module {scope} $end",
    ]
    lines += [f"$var wire 1 {ids[n]} {n} $end" for n in names]
    lines += ["$upscope $end", "$enddefinitions $end", "#0", "$dumpvars"]
    lines += [f"{t.initial[t.net(n)]}{ids[n]}" for n in names]
    lines.append("$end")

    by_time: dict[int, list[str]] = {}
    for n in names:
        for when, v in t.changes[t.net(n)]:
            by_time.setdefault(when, []).append(f"{v}{ids[n]}")
    for when in sorted(by_time):
        lines.append(f"#{when}")
        lines += by_time[when]
    return ("\n".join(lines) + "\n").encode("ascii")


def read_vcd(data: bytes | str) -> dict[str, tuple[int, tuple[tuple[int, int], ...]]]:
    """Parse what :func:`write_waveform` produces back into ``{name: (initial, changes)}``."""
    text = data.decode("ascii") if isinstance(data, bytes) else data
    toks = text.split()
    names: dict[str, str] = {}
    initial: dict[str, int] = {}
    changes: dict[str, list[tuple[int, int]]] = {}
    i = 0
    now = None
    in_dumpvars = False
    while i < len(toks):
        tok = toks[i]
        if tok == "$var":
            ident, name = toks[i + 3], toks[i + 4]
            names[ident] = name
            changes[name] = []
            i = toks.index("$end", i) + 1
            continue
        if tok in ("$timescale", "$scope", "$upscope", "$enddefinitions", "$date", "$version", "$comment"):
            i = toks.index("$end", i) + 1
            continue
        if tok == "$dumpvars":
            in_dumpvars = True
        elif tok == "$end":
            in_dumpvars = False
        elif tok.startswith("#"):
            now = int(tok[1:])
        elif tok[0] in "01xz":
            name = names[tok[1:]]
            v = int(tok[0]) if tok[0] in "01" else 0
            if in_dumpvars:
                initial[name] = v
            else:
                changes[name].append((now, v))
        i += 1
    return {n: (initial[n], tuple(changes[n])) for n in changes}
