"""Two-level minimization with don't-cares and NOR-only two-level forms.

Minterm indices are MSB-first: variable 0 is the most significant bit.
Cubes are written as pattern strings over the variable order, ``1`` for a
positive literal, ``0`` for a negative one and ``-`` for an absent variable.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .flow import ExcitationTable, input_vectors

MAX_VARS = 12


@dataclass(frozen=True)
class TruthSpec:
    names: tuple[str, ...]
    on_set: frozenset[int]
    dc_set: frozenset[int] = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "names", tuple(self.names))
        object.__setattr__(self, "on_set", frozenset(self.on_set))
        object.__setattr__(self, "dc_set", frozenset(self.dc_set))
        if self.nvars > MAX_VARS:
            raise ValueError(f"at most {MAX_VARS} variables supported, got {self.nvars}")
        overlap = self.on_set & self.dc_set
        if overlap:
            raise ValueError(f"on-set and dc-set overlap at minterms {sorted(overlap)}")
        limit = 1 << self.nvars
        bad = [m for m in self.on_set | self.dc_set if not 0 <= m < limit]
        if bad:
            raise ValueError(f"minterm indices out of range: {sorted(bad)}")

    @property
    def nvars(self) -> int:
        return len(self.names)

    @property
    def off_set(self) -> frozenset[int]:
        return frozenset(range(1 << self.nvars)) - self.on_set - self.dc_set

    def index(self, assignment: Mapping[str, int]) -> int:
        m = 0
        for name in self.names:
            m = (m << 1) | (assignment[name] & 1)
        return m


@dataclass(frozen=True, order=True)
class Cube:
    pattern: str

    def __post_init__(self):
        if set(self.pattern) - set("01-"):
            raise ValueError(f"bad cube pattern {self.pattern!r}")

    @property
    def literal_count(self) -> int:
        return sum(c != "-" for c in self.pattern)

    def covers(self, minterm: int) -> bool:
        n = len(self.pattern)
        for i, c in enumerate(self.pattern):
            if c != "-" and int(c) != (minterm >> (n - 1 - i)) & 1:
                return False
        return True

    def minterms(self) -> list[int]:
        slots = [(0, 1) if c == "-" else (int(c),) for c in self.pattern]
        return [int("".join(map(str, bits)), 2) if bits else 0 for bits in itertools.product(*slots)]

    def text(self, names: Sequence[str]) -> str:
        lits = [n if c == "1" else "~" + n for n, c in zip(names, self.pattern) if c != "-"]
        return " ".join(lits) if lits else "1"


@dataclass(frozen=True)
class Sop:
    names: tuple[str, ...]
    cubes: tuple[Cube, ...]

    def __post_init__(self):
        object.__setattr__(self, "names", tuple(self.names))
        cubes = []
        for c in self.cubes:
            c = c if isinstance(c, Cube) else Cube(c)
            if len(c.pattern) != len(self.names):
                raise ValueError(f"cube {c.pattern!r} does not match {len(self.names)} variables")
            if c not in cubes:
                cubes.append(c)
        cubes.sort(key=lambda c: c.text(self.names))
        object.__setattr__(self, "cubes", tuple(cubes))

    @property
    def is_constant(self) -> bool:
        return not self.cubes or any(c.literal_count == 0 for c in self.cubes)

    @property
    def literal_count(self) -> int:
        return sum(c.literal_count for c in self.cubes)

    def evaluate(self, assignment: Mapping[str, int]) -> int:
        return sop_eval(self, assignment)

    def __str__(self) -> str:
        if not self.cubes:
            return "0"
        return " + ".join(c.text(self.names) for c in self.cubes)


def sop_eval(s: Sop, assignment: Mapping[str, int]) -> int:
    missing = [n for n in s.names if n not in assignment]
    if missing:
        raise KeyError(f"assignment lacks variables {missing}")
    for cube in s.cubes:
        if all(c == "-" or int(c) == assignment[n] for n, c in zip(s.names, cube.pattern)):
            return 1
    return 0


def parse_sop(text: str, names: Sequence[str]) -> Sop:
    """Parse the canonical text form, e.g. ``"y1 y2 + y1 ~y0 ~CK"``."""
    names = tuple(names)
    text = text.strip()
    if text == "0":
        return Sop(names, ())
    cubes = []
    for term in text.split("+"):
        pattern = ["-"] * len(names)
        for lit in term.split():
            neg = lit.startswith("~")
            name = lit[1:] if neg else lit
            if lit == "1":
                continue
            if name not in names:
                raise ValueError(f"unknown variable {name!r} in {text!r}")
            i = names.index(name)
            want = "0" if neg else "1"
            if pattern[i] not in ("-", want):
                raise ValueError(f"contradictory literals for {name!r} in {term!r}")
            pattern[i] = want
        cubes.append(Cube("".join(pattern)))
    return Sop(names, tuple(cubes))


def equivalent_on_careset(s: Sop, spec: TruthSpec) -> bool:
    if len(s.names) != spec.nvars:
        raise ValueError("Sop and TruthSpec arity differ")
    care = spec.on_set | spec.off_set
    for m in care:
        bits = dict(zip(spec.names, _bits(m, spec.nvars)))
        if sop_eval(Sop(spec.names, s.cubes), bits) != (m in spec.on_set):
            return False
    return True


def _bits(m: int, n: int) -> tuple[int, ...]:
    return tuple((m >> (n - 1 - i)) & 1 for i in range(n))


# --- Quine-McCluskey -------------------------------------------------------

def prime_implicants(spec: TruthSpec) -> list[Cube]:
    """Primes of on-set + dc-set that cover at least one on-set minterm."""
    n = spec.nvars
    full = (1 << n) - 1
    # implicants are (value, mask); mask marks eliminated variables
    current = {(m, 0) for m in spec.on_set | spec.dc_set}
    primes: set[tuple[int, int]] = set()
    while current:
        merged: set[tuple[int, int]] = set()
        used: set[tuple[int, int]] = set()
        by_mask: dict[int, list[tuple[int, int]]] = {}
        for imp in current:
            by_mask.setdefault(imp[1], []).append(imp)
        for mask, group in by_mask.items():
            values = {v for v, _ in group}
            for v in values:
                free = ~mask & full
                for b in range(n):
                    bit = 1 << b
                    if free & bit and not v & bit and (v | bit) in values:
                        merged.add((v, mask | bit))
                        used.add((v, mask))
                        used.add((v | bit, mask))
        primes |= current - used
        current = merged
    cubes = [_cube(v, mask, n) for v, mask in primes]
    return sorted((c for c in cubes if any(c.covers(m) for m in spec.on_set)), key=lambda c: c.pattern)


def _cube(value: int, mask: int, n: int) -> Cube:
    chars = []
    for i in range(n):
        bit = 1 << (n - 1 - i)
        chars.append("-" if mask & bit else ("1" if value & bit else "0"))
    return Cube("".join(chars))


def qm_minimize(spec: TruthSpec) -> Sop:
    """Exact minimum cover: fewest cubes, then fewest literals, then lexicographic patterns."""
    if not spec.on_set:
        return Sop(spec.names, ())
    primes = prime_implicants(spec)
    covers = [frozenset(m for m in spec.on_set if p.covers(m)) for p in primes]
    chosen = _exact_cover(spec.on_set, primes, covers)
    return Sop(spec.names, tuple(primes[i] for i in chosen))


def _exact_cover(universe: Iterable[int], primes: list[Cube], covers: list[frozenset[int]]) -> list[int]:
    universe = frozenset(universe)
    by_minterm: dict[int, list[int]] = {m: [] for m in universe}
    for i, cov in enumerate(covers):
        for m in cov:
            by_minterm[m].append(i)

    essential = sorted({ids[0] for ids in by_minterm.values() if len(ids) == 1})
    best: list = [None, None]  # cost key, selection

    def key(sel: list[int]):
        return (len(sel), sum(primes[i].literal_count for i in sel), tuple(sorted(primes[i].pattern for i in sel)))

    def search(sel: list[int], covered: frozenset[int]):
        if best[0] is not None:
            partial = (len(sel), sum(primes[i].literal_count for i in sel))
            if partial > best[0][:2]:
                return
        left = universe - covered
        if not left:
            k = key(sel)
            if best[0] is None or k < best[0]:
                best[0], best[1] = k, list(sel)
            return
        if best[0] is not None and len(sel) + 1 > best[0][0]:
            return
        pivot = min(left, key=lambda m: (len(by_minterm[m]), m))
        for i in by_minterm[pivot]:
            if i in sel:
                continue
            sel.append(i)
            search(sel, covered | covers[i])
            sel.pop()

    start = frozenset().union(*(covers[i] for i in essential)) if essential else frozenset()
    search(list(essential), start)
    return best[1]


# --- equations from an excitation table -----------------------------------

@dataclass(frozen=True)
class Equations:
    """Minimized next-state and output functions over (inputs ++ state bits)."""

    names: tuple[str, ...]
    next_state: Mapping[str, Sop]
    outputs: Mapping[str, Sop]
    specs: Mapping[str, TruthSpec] = field(default_factory=dict)

    def functions(self) -> dict[str, Sop]:
        return {**self.next_state, **self.outputs}


def excitation_specs(exc: ExcitationTable) -> dict[str, TruthSpec]:
    """One TruthSpec per next-state bit and per output, keyed by bit/output name."""
    names = exc.inputs + exc.state_bits
    k = exc.k
    specs = {}
    for i, bit in enumerate(exc.state_bits):
        on, dc = set(), set()
        for (code, v), nxt in exc.entries.items():
            m = _index(v + code)
            if nxt is None:
                dc.add(m)
            elif nxt[i]:
                on.add(m)
        specs[bit] = TruthSpec(names, on, dc)
    for j, out in enumerate(exc.output_vars):
        on, dc = set(), set()
        for code, values in exc.outputs.items():
            for v in input_vectors(k):
                m = _index(v + code)
                if values[j] is None:
                    dc.add(m)
                elif values[j]:
                    on.add(m)
        specs[out] = TruthSpec(names, on, dc)
    return specs


def _index(bits: Sequence[int]) -> int:
    m = 0
    for b in bits:
        m = (m << 1) | b
    return m


def derive_equations(exc: ExcitationTable) -> Equations:
    specs = excitation_specs(exc)
    next_state = {b: qm_minimize(specs[b]) for b in exc.state_bits}
    outputs = {o: qm_minimize(specs[o]) for o in exc.output_vars}
    return Equations(exc.inputs + exc.state_bits, next_state, outputs, specs)


# --- NOR-only two-level form ----------------------------------------------

@dataclass(frozen=True)
class Gate:
    """A NOR gate; a single input makes it an inverter."""

    output: str
    inputs: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "inputs", tuple(self.inputs))
        if not self.inputs:
            raise ValueError(f"gate {self.output!r} has no inputs")

    def __str__(self) -> str:
        return f"NOR{len(self.inputs)} {self.output} <- {' '.join(self.inputs)}"


@dataclass(frozen=True)
class NorForm:
    """Local NOR network for one function.

    Local net names: variables as-is, ``~x`` for the inverter of ``x``,
    ``p<i>`` for product gates, ``sum`` for the OR-complement and ``out``
    for its trailing inverter.  ``output`` names the net carrying the
    function (possibly a variable or ``~x`` when no gate is needed).
    """

    names: tuple[str, ...]
    gates: tuple[Gate, ...]
    output: str

    @property
    def inverters(self) -> tuple[Gate, ...]:
        return tuple(g for g in self.gates if g.output.startswith("~"))

    def evaluate(self, assignment: Mapping[str, int]) -> int:
        values = {n: assignment[n] for n in self.names}
        for g in self.gates:
            values[g.output] = int(not any(values[i] for i in g.inputs))
        return values[self.output]


def to_nor_form(s: Sop) -> NorForm:
    if s.is_constant:
        raise ValueError(f"constant function {s} has no NOR form; tie the net to a constant")
    names = s.names
    inverted: set[str] = set()

    def lit(name: str, positive: bool) -> str:
        if positive:
            return name
        inverted.add(name)
        return "~" + name

    def complemented(cube: Cube) -> list[str]:
        return [lit(n, c == "0") for n, c in zip(names, cube.pattern) if c != "-"]

    products: list[Gate] = []
    terms: list[str] = []
    for cube in s.cubes:
        if cube.literal_count == 1:
            i = next(j for j, c in enumerate(cube.pattern) if c != "-")
            terms.append(lit(names[i], cube.pattern[i] == "1"))
        else:
            p = f"p{len(products)}"
            products.append(Gate(p, tuple(complemented(cube))))
            terms.append(p)

    tail: list[Gate] = []
    if len(terms) == 1:
        output = terms[0]
    else:
        tail = [Gate("sum", tuple(terms)), Gate("out", ("sum",))]
        output = "out"
    invs = [Gate("~" + n, (n,)) for n in names if n in inverted]
    return NorForm(names, tuple(invs + products + tail), output)
