"""Molecular graphs and their ingestion.

Covers a bounded SMILES subset (organic-subset atoms, bracket atoms with
charge and @/@@ tetrahedral marks, ring closures incl. %nn, branches, bond
symbols - = # :, aromatic lowercase c/n/o/s, dot-separated components), a
strict JSON graph format, implicit-hydrogen expansion against the bundled
valence model, and ring (non-bridge) detection.

Tetrahedral parity convention: the parser normalizes a written @/@@ mark to
ascending neighbor-id order (looking from the lowest-id neighbor, do the
remaining three, ids ascending, turn counterclockwise or clockwise), so any
writing of the same molecule parses to the same tags.  Hydrogens that are
still implicit count as larger than every existing id, which stays true
after expansion because new hydrogens are appended after all heavy atoms.
Once stored, tags are opaque per-atom data: mirror() flips them, relabel()
carries them verbatim, and downstream code never reinterprets them
geometrically.
"""

from dataclasses import dataclass, field, replace

import json

from .elements import (
    AROMATIC_SYMBOLS,
    ORGANIC_SUBSET,
    SUPPORTED_ELEMENTS,
    allowed_valences,
    atomic_mass,
)
from .errors import SchemaError, SmilesParseError

CHI_NONE = "NONE"
CHI_CW = "CW"
CHI_CCW = "CCW"
CHIRALITY_TAGS = (CHI_NONE, CHI_CW, CHI_CCW)

BOND_ORDERS = ("SINGLE", "DOUBLE", "TRIPLE", "AROMATIC")
# Twice the bond order, so aromatic (1.5) stays integral.
_ORDER_X2 = {"SINGLE": 2, "DOUBLE": 4, "TRIPLE": 6, "AROMATIC": 3}
_BOND_SYMBOLS = {"-": "SINGLE", "=": "DOUBLE", "#": "TRIPLE", ":": "AROMATIC"}


@dataclass(frozen=True)
class Atom:
    id: int
    element: str
    atomic_mass: float
    formal_charge: int = 0
    partial_charge: float | None = None
    chirality: str = CHI_NONE
    # Hydrogens owed to this atom but not yet present as vertices.
    implicit_hydrogens: int = 0


@dataclass(frozen=True)
class Bond:
    a: int
    b: int
    order: str
    in_ring: bool = False

    def __post_init__(self):
        if self.a == self.b:
            raise ValueError(f"self-bond on atom {self.a}")
        low, high = (self.b, self.a) if self.a > self.b else (self.a, self.b)
        object.__setattr__(self, "a", int(low))
        object.__setattr__(self, "b", int(high))

    @property
    def endpoints(self) -> tuple[int, int]:
        return (self.a, self.b)


@dataclass(frozen=True)
class MolecularGraph:
    name: str
    atoms: tuple[Atom, ...]
    bonds: tuple[Bond, ...]
    warnings: tuple[str, ...] = field(default=(), compare=False)

    @property
    def n_atoms(self) -> int:
        return len(self.atoms)

    def adjacency(self) -> list[list[int]]:
        adj = [[] for _ in self.atoms]
        for bond in self.bonds:
            adj[bond.a].append(bond.b)
            adj[bond.b].append(bond.a)
        return adj

    def degree(self, atom_id: int) -> int:
        return sum(1 for b in self.bonds if atom_id in b.endpoints)


SPLIT_TAGS = ("TRAIN", "VALID", "TEST")


@dataclass(frozen=True)
class DatasetRecord:
    """One labeled molecule: a SMILES string, an inline graph document, or a
    path to a molecule JSON file, plus its target and optional split tag."""
    record_id: str
    target: float | None = None
    smiles: str | None = None
    graph: dict | None = None
    graph_path: str | None = None
    split: str | None = None

    def __post_init__(self):
        if sum(s is not None for s in (self.smiles, self.graph, self.graph_path)) != 1:
            raise ValueError("record needs exactly one of smiles/graph/graph_path")
        if self.split is not None and self.split not in SPLIT_TAGS:
            raise ValueError(f"invalid split tag {self.split!r}")


def make_atom(atom_id, element, formal_charge=0, partial_charge=None,
              chirality=CHI_NONE, implicit_hydrogens=0) -> Atom:
    """Atom with its mass filled in from the bundled table."""
    return Atom(atom_id, element, atomic_mass(element), formal_charge,
                partial_charge, chirality, implicit_hydrogens)


def permutation_parity(values) -> int:
    """0 if sorting ``values`` is an even permutation, 1 if odd."""
    order = sorted(range(len(values)), key=values.__getitem__)
    seen = [False] * len(order)
    parity = 0
    for start in range(len(order)):
        if seen[start]:
            continue
        length = 0
        i = start
        while not seen[i]:
            seen[i] = True
            i = order[i]
            length += 1
        parity ^= (length - 1) & 1
    return parity


def _flip_tag(tag: str) -> str:
    if tag == CHI_CW:
        return CHI_CCW
    if tag == CHI_CCW:
        return CHI_CW
    return tag


def components(graph: MolecularGraph) -> list[list[int]]:
    adj = graph.adjacency()
    seen = [False] * graph.n_atoms
    out = []
    for start in range(graph.n_atoms):
        if seen[start]:
            continue
        comp = [start]
        seen[start] = True
        stack = [start]
        while stack:
            v = stack.pop()
            for w in adj[v]:
                if not seen[w]:
                    seen[w] = True
                    comp.append(w)
                    stack.append(w)
        out.append(sorted(comp))
    return out


# ---------------------------------------------------------------------------
# SMILES parsing

# Sorts after every real atom id when normalizing neighbor order.
_PENDING_H = float("inf")


class _ParsedAtom:
    __slots__ = ("element", "aromatic", "charge", "h_count", "bracket",
                 "stereo", "neighbor_order", "offset")

    def __init__(self, element, aromatic, offset, bracket=False, charge=0,
                 h_count=0, stereo=None):
        self.element = element
        self.aromatic = aromatic
        self.offset = offset
        self.bracket = bracket
        self.charge = charge
        self.h_count = h_count
        self.stereo = stereo          # None, "@", or "@@"
        self.neighbor_order = []      # atom ids / _PENDING_H / ring slots


def _parse_bracket(text: str, start: int) -> tuple[_ParsedAtom, int]:
    """Parse a bracket atom starting at text[start] == '['; returns atom and end index."""
    end = text.find("]", start)
    if end < 0:
        raise SmilesParseError("unterminated bracket atom", start)
    body = text[start + 1:end]
    i = 0
    if i < len(body) and body[i].isdigit():
        raise SmilesParseError("isotope notation not supported", start + 1)
    element = None
    aromatic = False
    if i < len(body) and body[i] in AROMATIC_SYMBOLS:
        element = body[i].upper()
        aromatic = True
        i += 1
    elif i < len(body) and body[i].isupper():
        # a lowercase follower always belongs to a two-letter element symbol
        if i + 1 < len(body) and body[i + 1].islower():
            two = body[i:i + 2]
            if two not in SUPPORTED_ELEMENTS:
                raise SmilesParseError(f"unsupported element {two!r}", start + 1 + i)
            element = two
            i += 2
        elif body[i] in SUPPORTED_ELEMENTS:
            element = body[i]
            i += 1
        else:
            raise SmilesParseError(f"unsupported element {body[i]!r}", start + 1 + i)
    if element is None:
        raise SmilesParseError("missing element in bracket atom", start + 1)

    stereo = None
    if body[i:i + 2] == "@@":
        stereo = "@@"
        i += 2
    elif body[i:i + 1] == "@":
        stereo = "@"
        i += 1

    h_count = 0
    if i < len(body) and body[i] == "H":
        i += 1
        digits = ""
        while i < len(body) and body[i].isdigit():
            digits += body[i]
            i += 1
        h_count = int(digits) if digits else 1

    charge = 0
    if i < len(body) and body[i] in "+-":
        sign = 1 if body[i] == "+" else -1
        symbol = body[i]
        i += 1
        digits = ""
        while i < len(body) and body[i].isdigit():
            digits += body[i]
            i += 1
        if digits:
            charge = sign * int(digits)
        else:
            charge = sign
            while i < len(body) and body[i] == symbol:
                charge += sign
                i += 1

    if i != len(body):
        raise SmilesParseError(f"unexpected {body[i]!r} in bracket atom", start + 1 + i)
    atom = _ParsedAtom(element, aromatic, start, bracket=True, charge=charge,
                       h_count=h_count, stereo=stereo)
    return atom, end + 1


class _RingSlot:
    """Placeholder in an atom's neighbor order until the ring closes."""

    __slots__ = ("partner",)

    def __init__(self):
        self.partner = None


def parse_smiles(text: str, name: str = "") -> MolecularGraph:
    """Parse SMILES text into a molecular graph.

    Implicit hydrogens are recorded on the atoms but not expanded; ring
    flags are not yet computed.  Chirality tags are normalized to ascending
    neighbor-id order so isomorphic inputs produce identical tags.
    """
    if not text:
        raise SmilesParseError("empty SMILES", 0)

    atoms: list[_ParsedAtom] = []
    bonds: dict[tuple[int, int], tuple[str, int]] = {}  # pair -> (order, offset)
    prev: int | None = None
    branch_stack: list[tuple[int | None, int]] = []
    pending: tuple[str, int] | None = None  # (order, offset)
    rings: dict[int, tuple[int, str | None, _RingSlot, int]] = {}

    def add_bond(a: int, b: int, order: str, offset: int):
        key = (a, b) if a < b else (b, a)
        if a == b:
            raise SmilesParseError("ring closure forms a self-bond", offset)
        if key in bonds:
            raise SmilesParseError("duplicate bond", offset)
        bonds[key] = (order, offset)

    def new_atom(parsed: _ParsedAtom):
        nonlocal prev, pending
        idx = len(atoms)
        atoms.append(parsed)
        if prev is not None:
            order = pending[0] if pending else None
            if order is None:
                order = "AROMATIC" if (parsed.aromatic and atoms[prev].aromatic) else "SINGLE"
            add_bond(prev, idx, order, pending[1] if pending else parsed.offset)
            parsed.neighbor_order.append(prev)
            atoms[prev].neighbor_order.append(idx)
        elif pending is not None:
            raise SmilesParseError("bond symbol without a preceding atom", pending[1])
        if parsed.h_count == 1:
            parsed.neighbor_order.append(_PENDING_H)
        prev = idx
        pending = None

    def ring_digit(number: int, offset: int):
        nonlocal pending
        if prev is None:
            raise SmilesParseError("ring closure before any atom", offset)
        explicit = pending[0] if pending else None
        if number in rings:
            open_atom, open_order, slot, open_offset = rings.pop(number)
            order = explicit or open_order
            if explicit and open_order and explicit != open_order:
                raise SmilesParseError("conflicting ring-closure bond orders", offset)
            if order is None:
                both_aromatic = atoms[open_atom].aromatic and atoms[prev].aromatic
                order = "AROMATIC" if both_aromatic else "SINGLE"
            add_bond(open_atom, prev, order, offset)
            slot.partner = prev
            atoms[prev].neighbor_order.append(open_atom)
        else:
            slot = _RingSlot()
            rings[number] = (prev, explicit, slot, offset)
            atoms[prev].neighbor_order.append(slot)
        pending = None

    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch == "(":
            if prev is None:
                raise SmilesParseError("branch without a preceding atom", i)
            branch_stack.append((prev, i))
            i += 1
        elif ch == ")":
            if not branch_stack:
                raise SmilesParseError("unbalanced parentheses", i)
            prev = branch_stack.pop()[0]
            i += 1
        elif ch in _BOND_SYMBOLS:
            if pending is not None:
                raise SmilesParseError("consecutive bond symbols", i)
            pending = (_BOND_SYMBOLS[ch], i)
            i += 1
        elif ch == ".":
            if pending is not None:
                raise SmilesParseError("bond symbol before component separator", pending[1])
            prev = None
            i += 1
        elif ch.isdigit():
            ring_digit(int(ch), i)
            i += 1
        elif ch == "%":
            digits = text[i + 1:i + 3]
            if len(digits) != 2 or not digits.isdigit():
                raise SmilesParseError("% must be followed by two digits", i)
            ring_digit(int(digits), i)
            i += 3
        elif ch == "[":
            parsed, i = _parse_bracket(text, i)
            new_atom(parsed)
        elif ch in AROMATIC_SYMBOLS:
            new_atom(_ParsedAtom(ch.upper(), True, i))
            i += 1
        elif ch.isupper():
            two = text[i:i + 2]
            if two in ("Cl", "Br"):
                new_atom(_ParsedAtom(two, False, i))
                i += 2
            elif ch in ORGANIC_SUBSET:
                new_atom(_ParsedAtom(ch, False, i))
                i += 1
            else:
                raise SmilesParseError(f"unsupported element {ch!r}", i)
        else:
            raise SmilesParseError(f"unexpected character {ch!r}", i)

    if pending is not None:
        raise SmilesParseError("dangling bond symbol", pending[1])
    if branch_stack:
        raise SmilesParseError("unbalanced parentheses", branch_stack[-1][1])
    if rings:
        number = next(iter(rings))
        raise SmilesParseError(f"unmatched ring closure {number}", rings[number][3])

    return _finish_parse(atoms, bonds, name)


def _finish_parse(atoms, bonds, name) -> MolecularGraph:
    bond_x2 = [0] * len(atoms)
    degree = [0] * len(atoms)
    for (a, b), (order, _) in bonds.items():
        bond_x2[a] += _ORDER_X2[order]
        bond_x2[b] += _ORDER_X2[order]
        degree[a] += 1
        degree[b] += 1

    out_atoms = []
    for idx, parsed in enumerate(atoms):
        implicit_h = _implicit_hydrogens(parsed, bond_x2[idx], degree[idx])
        tag = CHI_NONE
        if parsed.stereo is not None:
            if degree[idx] + parsed.h_count != 4:
                raise SmilesParseError(
                    "chirality mark on an atom without four distinct neighbors",
                    parsed.offset)
            ordered = [s.partner if isinstance(s, _RingSlot) else s
                       for s in parsed.neighbor_order]
            tag = CHI_CW if parsed.stereo == "@@" else CHI_CCW
            if permutation_parity(ordered):
                tag = _flip_tag(tag)
        out_atoms.append(make_atom(idx, parsed.element, parsed.charge,
                                   chirality=tag, implicit_hydrogens=implicit_h))

    out_bonds = tuple(Bond(a, b, order) for (a, b), (order, _) in sorted(bonds.items()))
    graph = MolecularGraph(name, tuple(out_atoms), out_bonds)
    warnings = ()
    if graph.n_atoms and len(components(graph)) > 1:
        warnings = ("disconnected input",)
    return replace(graph, warnings=warnings)


def _implicit_hydrogens(parsed: _ParsedAtom, bond_x2: int, degree: int) -> int:
    """Implicit hydrogen count under the valence model; raises on overflow."""
    if parsed.aromatic:
        # Aromatic connection targets: c wants 3 explicit neighbors, n 2-3,
        # o/s exactly 2; only bare aromatic carbon earns an implicit H.
        total = degree + parsed.h_count
        limits = {"C": 3, "N": 3, "O": 2, "S": 2}[parsed.element]
        if parsed.bracket:
            if total > limits:
                raise SmilesParseError("valence overflow", parsed.offset)
            return parsed.h_count
        if parsed.element == "C":
            if degree > 3:
                raise SmilesParseError("valence overflow", parsed.offset)
            return max(0, 3 - degree)
        if degree > limits:
            raise SmilesParseError("valence overflow", parsed.offset)
        return 0

    slots = (bond_x2 + 1) // 2
    allowed = allowed_valences(parsed.element, parsed.charge)
    if parsed.bracket:
        if slots + parsed.h_count not in allowed:
            raise SmilesParseError("valence overflow", parsed.offset)
        return parsed.h_count
    for valence in allowed:
        if valence >= slots:
            return valence - slots
    raise SmilesParseError("valence overflow", parsed.offset)


# ---------------------------------------------------------------------------
# Derived-structure operations

def expand_hydrogens(graph: MolecularGraph) -> MolecularGraph:
    """Turn owed implicit hydrogens into explicit atoms with SINGLE bonds.

    New hydrogens are appended after all existing atoms in parent-id order,
    which keeps normalized chirality tags valid (hydrogen ids sort last).
    Idempotent: expanded graphs owe no hydrogens.
    """
    atoms = [replace(a, implicit_hydrogens=0) for a in graph.atoms]
    bonds = list(graph.bonds)
    next_id = len(atoms)
    for atom in graph.atoms:
        for _ in range(atom.implicit_hydrogens):
            atoms.append(make_atom(next_id, "H"))
            bonds.append(Bond(atom.id, next_id, "SINGLE"))
            next_id += 1
    bonds.sort(key=lambda b: (b.a, b.b))
    return replace(graph, atoms=tuple(atoms), bonds=tuple(bonds))


def detect_rings(graph: MolecularGraph) -> MolecularGraph:
    """Set in_ring on every bond: true iff the bond lies on some cycle (non-bridge)."""
    n = graph.n_atoms
    adj: list[list[tuple[int, int]]] = [[] for _ in range(n)]
    for bi, bond in enumerate(graph.bonds):
        adj[bond.a].append((bond.b, bi))
        adj[bond.b].append((bond.a, bi))

    bridge = [False] * len(graph.bonds)
    disc = [-1] * n
    low = [0] * n
    timer = 0
    for root in range(n):
        if disc[root] != -1:
            continue
        stack = [(root, -1, iter(adj[root]))]
        disc[root] = low[root] = timer
        timer += 1
        while stack:
            v, in_edge, it = stack[-1]
            advanced = False
            for w, ei in it:
                if ei == in_edge:
                    continue
                if disc[w] == -1:
                    disc[w] = low[w] = timer
                    timer += 1
                    stack.append((w, ei, iter(adj[w])))
                    advanced = True
                    break
                low[v] = min(low[v], disc[w])
            if advanced:
                continue
            stack.pop()
            if stack:
                parent = stack[-1][0]
                low[parent] = min(low[parent], low[v])
                if low[v] > disc[parent]:
                    bridge[in_edge] = True

    bonds = tuple(replace(b, in_ring=not bridge[i]) for i, b in enumerate(graph.bonds))
    return replace(graph, bonds=bonds)


def ring_atoms(graph: MolecularGraph) -> set[int]:
    """Atom ids that are endpoints of some in-ring bond."""
    out: set[int] = set()
    for bond in graph.bonds:
        if bond.in_ring:
            out.add(bond.a)
            out.add(bond.b)
    return out


def mirror(graph: MolecularGraph) -> MolecularGraph:
    """Reflected copy: every CW tag becomes CCW and vice versa."""
    atoms = tuple(replace(a, chirality=_flip_tag(a.chirality)) for a in graph.atoms)
    return replace(graph, atoms=atoms)


def relabel(graph: MolecularGraph, perm: list[int]) -> MolecularGraph:
    """Apply a vertex relabeling (old id -> perm[old id]).

    All atom fields, chirality tags included, travel verbatim with their
    atoms: tags are opaque input data here, so a relabeled graph carries
    exactly the same tag multiset and downstream fingerprints are identical.
    """
    perm = [int(p) for p in perm]
    if sorted(perm) != list(range(graph.n_atoms)):
        raise ValueError("perm must be a permutation of the atom ids")
    new_atoms: list[Atom | None] = [None] * graph.n_atoms
    for atom in graph.atoms:
        new_atoms[perm[atom.id]] = replace(atom, id=perm[atom.id])
    new_bonds = tuple(sorted(
        (replace(b, a=perm[b.a], b=perm[b.b]) for b in graph.bonds),
        key=lambda b: (b.a, b.b)))
    return replace(graph, atoms=tuple(new_atoms), bonds=new_bonds)


# ---------------------------------------------------------------------------
# JSON molecule format

_ATOM_KEYS = {"element", "formal_charge", "partial_charge", "chirality"}
_BOND_KEYS = {"a", "b", "order"}


def graph_to_json_dict(graph: MolecularGraph) -> dict:
    """Serialize to the documented JSON schema (hydrogen-complete graphs only)."""
    if any(a.implicit_hydrogens for a in graph.atoms):
        raise ValueError("serialize requires an expanded graph")
    atoms = []
    for a in graph.atoms:
        entry: dict = {"element": a.element, "formal_charge": a.formal_charge}
        if a.partial_charge is not None:
            entry["partial_charge"] = a.partial_charge
        if a.chirality != CHI_NONE:
            entry["chirality"] = a.chirality
        atoms.append(entry)
    bonds = [{"a": b.a, "b": b.b, "order": b.order} for b in graph.bonds]
    return {"name": graph.name, "atoms": atoms, "bonds": bonds}


def load_graph_json(source, strict: bool = True) -> MolecularGraph:
    """Load a molecule from a JSON file path, JSON text, or parsed dict.

    Fields are taken verbatim (no hydrogens are owed); ring flags are
    recomputed.  Schema or invariant violations raise with the JSON path.
    """
    if isinstance(source, dict):
        doc = source
    else:
        text = None
        try:
            with open(source, "r", encoding="utf-8") as fh:
                text = fh.read()
        except (OSError, TypeError):
            if isinstance(source, str):
                text = source
            else:
                raise SchemaError(f"cannot read molecule source {source!r}")
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"invalid JSON: {exc}") from None
    return graph_from_json_dict(doc, strict=strict)


def graph_from_json_dict(doc: dict, strict: bool = True) -> MolecularGraph:
    if not isinstance(doc, dict):
        raise SchemaError("molecule document must be an object")
    warnings: list[str] = []
    extra = set(doc) - {"name", "atoms", "bonds"}
    if extra:
        msg = f"unknown keys {sorted(extra)}"
        if strict:
            raise SchemaError(msg)
        warnings.append(msg)
    name = doc.get("name", "")
    if not isinstance(name, str):
        raise SchemaError("name must be a string", "$.name")
    raw_atoms = doc.get("atoms")
    raw_bonds = doc.get("bonds", [])
    if not isinstance(raw_atoms, list) or not raw_atoms:
        raise SchemaError("atoms must be a non-empty array", "$.atoms")
    if not isinstance(raw_bonds, list):
        raise SchemaError("bonds must be an array", "$.bonds")

    atoms = []
    for i, entry in enumerate(raw_atoms):
        path = f"$.atoms[{i}]"
        if not isinstance(entry, dict):
            raise SchemaError("atom must be an object", path)
        extra = set(entry) - _ATOM_KEYS
        if extra:
            msg = f"unknown atom keys {sorted(extra)}"
            if strict:
                raise SchemaError(msg, path)
            warnings.append(f"{msg} at {path}")
        element = entry.get("element")
        if element not in SUPPORTED_ELEMENTS:
            raise SchemaError(f"unsupported element {element!r}", path + ".element")
        charge = entry.get("formal_charge", 0)
        if not isinstance(charge, int) or isinstance(charge, bool):
            raise SchemaError("formal_charge must be an integer", path + ".formal_charge")
        partial = entry.get("partial_charge")
        if partial is not None and not isinstance(partial, (int, float)):
            raise SchemaError("partial_charge must be a number", path + ".partial_charge")
        tag = entry.get("chirality", CHI_NONE)
        if tag not in CHIRALITY_TAGS:
            raise SchemaError(f"invalid chirality {tag!r}", path + ".chirality")
        atoms.append(make_atom(i, element, charge,
                               None if partial is None else float(partial), tag))

    seen_pairs = set()
    bonds = []
    for i, entry in enumerate(raw_bonds):
        path = f"$.bonds[{i}]"
        if not isinstance(entry, dict):
            raise SchemaError("bond must be an object", path)
        extra = set(entry) - _BOND_KEYS
        if extra:
            msg = f"unknown bond keys {sorted(extra)}"
            if strict:
                raise SchemaError(msg, path)
            warnings.append(f"{msg} at {path}")
        a, b, order = entry.get("a"), entry.get("b"), entry.get("order")
        for key, val in (("a", a), ("b", b)):
            if not isinstance(val, int) or isinstance(val, bool) or not 0 <= val < len(atoms):
                raise SchemaError(f"endpoint {key} out of range", f"{path}.{key}")
        if a == b:
            raise SchemaError("bond endpoints must differ", path)
        if order not in BOND_ORDERS:
            raise SchemaError(f"invalid bond order {order!r}", path + ".order")
        pair = (min(a, b), max(a, b))
        if pair in seen_pairs:
            raise SchemaError("duplicate bond", path)
        seen_pairs.add(pair)
        bonds.append(Bond(a, b, order))

    graph = MolecularGraph(name, tuple(atoms), tuple(sorted(bonds, key=lambda b: (b.a, b.b))))
    _validate_loaded(graph)
    graph = detect_rings(graph)
    if len(components(graph)) > 1:
        warnings.append("disconnected input")
    return replace(graph, warnings=tuple(warnings))


def _validate_loaded(graph: MolecularGraph):
    bond_x2 = [0] * graph.n_atoms
    degree = [0] * graph.n_atoms
    aromatic = [False] * graph.n_atoms
    for bond in graph.bonds:
        for v in bond.endpoints:
            bond_x2[v] += _ORDER_X2[bond.order]
            degree[v] += 1
            if bond.order == "AROMATIC":
                aromatic[v] = True
    for atom in graph.atoms:
        path = f"$.atoms[{atom.id}]"
        if atom.chirality != CHI_NONE and degree[atom.id] != 4:
            raise SchemaError("chirality tag on an atom without four distinct neighbors", path)
        if aromatic[atom.id]:
            limit = {"C": 3, "N": 3, "O": 2, "S": 2}.get(atom.element)
            if limit is None or degree[atom.id] > limit:
                raise SchemaError("aromatic valence violation", path)
            continue
        slots = (bond_x2[atom.id] + 1) // 2
        if slots not in allowed_valences(atom.element, atom.formal_charge):
            raise SchemaError(
                f"valence {slots} not allowed for {atom.element} "
                f"(charge {atom.formal_charge})", path)


def valence_slots(graph: MolecularGraph) -> list[float]:
    """Per-atom bond-order sum plus owed hydrogens (diagnostic helper)."""
    totals = [0.0] * graph.n_atoms
    for bond in graph.bonds:
        for v in bond.endpoints:
            totals[v] += _ORDER_X2[bond.order] / 2.0
    return [t + a.implicit_hydrogens for t, a in zip(totals, graph.atoms)]
