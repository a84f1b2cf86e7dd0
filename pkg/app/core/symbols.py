"""
Parsing, factorization and structural analysis of Dirichlet polynomial symbols.
"""

import itertools
import json
import math
import re
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

import sympy

from app.config.settings import settings
from app.core.bohr_lift import lift, lift_phi0, range_analysis
from app.core.errors import PreconditionError, SearchBoundExceeded, SymbolParseError
from app.models.lift import BohrLift, BoundarySearchConfig, CompactnessVerdict, RangeAnalysis, Verdict
from app.models.symbol import DirichletSymbol, ExponentVector, GeneratingSet, RangeKind, SymbolProfile
from app.utils.logger import get_logger

logger = get_logger(__name__)

ExactPair = Tuple[Fraction, Fraction]

_DIRICHLET_TERM = re.compile(r"^(?:(?P<coef>.*?)\s*\*\s*)?(?P<n>\d+)\s*\^\s*(?:-\s*s|\(\s*-\s*s\s*\))$")
_S_TERM = re.compile(r"^(?:(?P<k>\d+)\s*\*?\s*)?s$")
_DECIMAL = re.compile(r"^(\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?$")
_RATIONAL = re.compile(r"^(\d+)\s*/\s*(\d+)$")
_MANTISSA_TAIL = re.compile(r"(\d+\.?\d*|\.\d+)[eE]$")


# ---------------------------------------------------------------------------
# Parsing and printing
# ---------------------------------------------------------------------------

def _split_terms(text: str) -> List[Tuple[int, str]]:
    """Split on top-level + and -, keeping signs inside exponents and parentheses."""
    terms: List[Tuple[int, str]] = []
    depth = 0
    sign = 1
    buf: List[str] = []
    for ch in text:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
            if depth < 0:
                raise SymbolParseError("Unbalanced parentheses", {"text": text})
        if depth == 0 and ch in "+-":
            body = "".join(buf).strip()
            if body.endswith("^") or _MANTISSA_TAIL.search(body):
                buf.append(ch)
                continue
            if body:
                terms.append((sign, body))
                buf = []
                sign = -1 if ch == "-" else 1
            else:
                sign = sign * (-1 if ch == "-" else 1)
            continue
        buf.append(ch)
    if depth != 0:
        raise SymbolParseError("Unbalanced parentheses", {"text": text})
    body = "".join(buf).strip()
    if body:
        terms.append((sign, body))
    elif terms or text.strip():
        raise SymbolParseError("Dangling operator", {"text": text})
    return terms


def _wrapped_in_parens(text: str) -> bool:
    if not (text.startswith("(") and text.endswith(")")):
        return False
    depth = 0
    for k, ch in enumerate(text):
        depth += ch == "("
        depth -= ch == ")"
        if depth == 0 and k < len(text) - 1:
            return False
    return True


def _parse_real(text: str) -> Fraction:
    text = text.strip()
    match = _RATIONAL.match(text)
    if match:
        denominator = int(match.group(2))
        if denominator == 0:
            raise SymbolParseError("Zero denominator", {"text": text})
        return Fraction(int(match.group(1)), denominator)
    if _DECIMAL.match(text):
        return Fraction(text)
    raise SymbolParseError("Malformed number", {"text": text})


def _parse_coefficient(text: str) -> ExactPair:
    text = text.strip()
    if not text:
        raise SymbolParseError("Empty coefficient")
    if _wrapped_in_parens(text):
        re_total, im_total = Fraction(0), Fraction(0)
        for sign, body in _split_terms(text[1:-1]):
            re_part, im_part = _parse_coefficient(body)
            re_total += sign * re_part
            im_total += sign * im_part
        return re_total, im_total
    if text[-1] in "ij":
        magnitude = text[:-1].strip().rstrip("*").strip()
        return Fraction(0), Fraction(1) if not magnitude else _parse_real(magnitude)
    return _parse_real(text), Fraction(0)


def _make_coefficient(pair: ExactPair) -> Any:
    re_part, im_part = pair
    if im_part == 0:
        return re_part
    return complex(float(re_part), float(im_part))


def _to_exact_pair(value: Any) -> ExactPair:
    if isinstance(value, complex):
        return Fraction(repr(value.real)), Fraction(repr(value.imag))
    if isinstance(value, float):
        return Fraction(repr(value)), Fraction(0)
    return Fraction(value), Fraction(0)


def _assemble(c0: int, c1: ExactPair, terms: Dict[int, ExactPair]) -> DirichletSymbol:
    if c0 < 0:
        raise SymbolParseError("Negative characteristic", {"c0": c0})
    cleaned = {n: _make_coefficient(v) for n, v in sorted(terms.items()) if v != (0, 0)}
    return DirichletSymbol(c0=c0, c1=_make_coefficient(c1), terms=cleaned)


def parse_symbol(text: str) -> DirichletSymbol:
    """
    Parse a symbol expression such as ``9/2 - 2^-s - 3^-s - 2*6^-s``.

    Args:
        text: Expression in the symbol grammar

    Returns:
        Normalized symbol with zero terms dropped and duplicates merged
    """
    if not text or not text.strip():
        raise SymbolParseError("Empty symbol expression")

    c0 = 0
    c1 = (Fraction(0), Fraction(0))
    terms: Dict[int, ExactPair] = {}

    for sign, body in _split_terms(text):
        s_match = _S_TERM.match(body)
        if s_match:
            c0 += sign * int(s_match.group("k") or 1)
            continue
        d_match = _DIRICHLET_TERM.match(body)
        if d_match:
            n = int(d_match.group("n"))
            if n <= 1:
                raise SymbolParseError("Dirichlet term needs n >= 2", {"term": body})
            coef_text = d_match.group("coef")
            re_part, im_part = _parse_coefficient(coef_text) if coef_text else (Fraction(1), Fraction(0))
            old = terms.get(n, (Fraction(0), Fraction(0)))
            terms[n] = (old[0] + sign * re_part, old[1] + sign * im_part)
            continue
        if "s" in body:
            raise SymbolParseError("Malformed term", {"term": body})
        re_part, im_part = _parse_coefficient(body)
        c1 = (c1[0] + sign * re_part, c1[1] + sign * im_part)

    return _assemble(c0, c1, terms)


def _json_real(value: Any) -> Fraction:
    if isinstance(value, bool):
        raise SymbolParseError("Boolean is not a coefficient")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        return Fraction(repr(value))
    if isinstance(value, str):
        sign = -1 if value.strip().startswith("-") else 1
        return sign * _parse_real(value.strip().lstrip("+-"))
    raise SymbolParseError("Unsupported coefficient value", {"value": repr(value)})


def _json_coefficient(value: Any) -> ExactPair:
    if isinstance(value, (list, tuple)):
        if len(value) != 2:
            raise SymbolParseError("Coefficient pairs need two entries", {"value": list(value)})
        return _json_real(value[0]), _json_real(value[1])
    if isinstance(value, str):
        split = _split_terms(value)
        re_total, im_total = Fraction(0), Fraction(0)
        for sign, body in split:
            re_part, im_part = _parse_coefficient(body)
            re_total += sign * re_part
            im_total += sign * im_part
        return re_total, im_total
    return _json_real(value), Fraction(0)


def symbol_from_json(data: Dict[str, Any]) -> DirichletSymbol:
    """Build a symbol from ``{"c0": 0, "c1": [4.5, 0], "terms": [{"n": 2, "c": [-1, 0]}]}``."""
    if not isinstance(data, dict):
        raise SymbolParseError("Symbol JSON must be an object")
    try:
        c0 = int(data.get("c0", 0))
    except (TypeError, ValueError) as exc:
        raise SymbolParseError("Malformed c0", {"value": repr(data.get("c0"))}) from exc
    c1 = _json_coefficient(data.get("c1", 0))

    raw_terms = data.get("terms", [])
    if isinstance(raw_terms, dict):
        raw_terms = [{"n": n, "c": c} for n, c in raw_terms.items()]

    terms: Dict[int, ExactPair] = {}
    for entry in raw_terms:
        try:
            n = int(entry["n"])
            coefficient = _json_coefficient(entry["c"])
        except (KeyError, TypeError, ValueError) as exc:
            raise SymbolParseError("Malformed term entry", {"entry": repr(entry)}) from exc
        if n <= 1:
            raise SymbolParseError("Dirichlet term needs n >= 2", {"n": n})
        old = terms.get(n, (Fraction(0), Fraction(0)))
        terms[n] = (old[0] + coefficient[0], old[1] + coefficient[1])
    return _assemble(c0, c1, terms)


def load_symbol(source: str) -> DirichletSymbol:
    """
    Accept an expression, a JSON document, or a path to a file holding either.

    Args:
        source: Expression text, JSON text or file path

    Returns:
        Parsed symbol
    """
    text = source.strip()
    if text.startswith("{"):
        try:
            return symbol_from_json(json.loads(text))
        except json.JSONDecodeError as exc:
            raise SymbolParseError("Malformed symbol JSON", {"error": str(exc)}) from exc

    path = Path(text)
    if path.suffix.lower() in {".json", ".txt", ".sym"} or path.is_file():
        if not path.is_file():
            raise SymbolParseError("Symbol file not found", {"path": text})
        content = path.read_text(encoding="utf-8").strip()
        if content.startswith("{"):
            return load_symbol(content)
        return parse_symbol(content)
    return parse_symbol(text)


def _format_real(value: Fraction) -> str:
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


def _signed_magnitude(value: Any) -> Tuple[int, str]:
    if isinstance(value, complex):
        op = "+" if value.imag >= 0 else "-"
        return 1, f"({repr(float(value.real))}{op}{repr(abs(float(value.imag)))}i)"
    value = Fraction(value)
    return (-1 if value < 0 else 1), _format_real(abs(value))


def format_symbol(sym: DirichletSymbol) -> str:
    """Print a symbol in the grammar accepted by ``parse_symbol``."""
    parts: List[Tuple[int, str]] = []
    if sym.c0:
        parts.append((1, "s" if sym.c0 == 1 else f"{sym.c0}*s"))
    if sym.c1 != 0 or (not sym.c0 and not sym.terms):
        parts.append(_signed_magnitude(sym.c1))
    for n in sym.support():
        sign, magnitude = _signed_magnitude(sym.terms[n])
        parts.append((sign, f"{n}^-s" if magnitude == "1" else f"{magnitude}*{n}^-s"))

    text = ""
    for k, (sign, body) in enumerate(parts):
        if k == 0:
            text = body if sign > 0 else f"-{body}"
        else:
            text += f" {'+' if sign > 0 else '-'} {body}"
    return text


# ---------------------------------------------------------------------------
# Exact linear algebra over the rationals
# ---------------------------------------------------------------------------

def _solve_rational(rows: Sequence[Sequence[int]], target: Sequence[int]) -> Optional[List[Fraction]]:
    """Solve sum_i x_i rows[i] = target; None if inconsistent or rows are dependent."""
    d = len(rows)
    width = len(target)
    m = [[Fraction(rows[i][p]) for i in range(d)] + [Fraction(target[p])] for p in range(width)]
    r = 0
    for col in range(d):
        pivot = next((k for k in range(r, width) if m[k][col] != 0), None)
        if pivot is None:
            return None
        m[r], m[pivot] = m[pivot], m[r]
        inv = 1 / m[r][col]
        m[r] = [v * inv for v in m[r]]
        for k in range(width):
            if k != r and m[k][col] != 0:
                factor = m[k][col]
                m[k] = [a - factor * b for a, b in zip(m[k], m[r])]
        r += 1
    if any(m[k][d] != 0 for k in range(r, width)):
        return None
    return [m[i][d] for i in range(d)]


def _rank(rows: Sequence[Sequence[int]]) -> int:
    """Exact rank by fraction-free (Bareiss) elimination."""
    m = [[int(v) for v in row] for row in rows]
    if not m:
        return 0
    n_rows, n_cols = len(m), len(m[0])
    rank = 0
    prev = 1
    for col in range(n_cols):
        pivot = next((k for k in range(rank, n_rows) if m[k][col] != 0), None)
        if pivot is None:
            continue
        m[rank], m[pivot] = m[pivot], m[rank]
        for k in range(rank + 1, n_rows):
            for j in range(col + 1, n_cols):
                m[k][j] = (m[rank][col] * m[k][j] - m[k][col] * m[rank][j]) // prev
            m[k][col] = 0
        prev = m[rank][col]
        rank += 1
        if rank == n_rows:
            break
    return rank


def _independent_basis(vectors: Sequence[Tuple[int, ...]]) -> List[Tuple[int, ...]]:
    basis: List[Tuple[int, ...]] = []
    for v in vectors:
        if _rank(basis + [v]) > len(basis):
            basis.append(v)
    return basis


# ---------------------------------------------------------------------------
# Structure
# ---------------------------------------------------------------------------

def factorize(n: int) -> ExponentVector:
    """
    Exact prime factorization.

    Args:
        n: Integer in [2, max_factor]

    Returns:
        Exponent vector with primes in increasing order
    """
    if isinstance(n, bool) or not isinstance(n, int) or n < 2 or n > settings.max_factor:
        raise PreconditionError("Integer out of range for factorization", {"n": repr(n)})
    factors = sympy.factorint(n)
    return ExponentVector(entries={int(p): int(e) for p, e in sorted(factors.items())})


def _candidate_vectors(vectors: Dict[int, Tuple[int, ...]]) -> List[Tuple[int, ...]]:
    found = set()
    for vec in vectors.values():
        for divisor in itertools.product(*(range(e + 1) for e in vec)):
            if any(divisor) and divisor not in found:
                found.add(divisor)
                if len(found) > settings.max_candidates:
                    raise SearchBoundExceeded(
                        "Too many candidate generators", {"cap": settings.max_candidates}
                    )
    return list(found)


def complex_dimension(lam: Iterable[int]) -> Tuple[int, List[GeneratingSet]]:
    """
    Complex dimension of a frequency set and all its minimal generating sets.

    Candidates are the nonzero divisors of elements of the set whose exponent
    vectors lie in the rational span of the set; every size-d subset of them
    is tested for nonnegative integral representations of all elements.

    Args:
        lam: Frequencies n >= 2

    Returns:
        (d, generating sets in lexicographic order of their generator lists)
    """
    values = sorted({int(n) for n in lam})
    if not values:
        raise PreconditionError("Frequency set is empty")
    if values[0] < 2:
        raise PreconditionError("Frequencies must be >= 2", {"n": values[0]})

    factors = {n: factorize(n).entries for n in values}
    primes = sorted(set().union(*(f.keys() for f in factors.values())))
    vectors = {n: tuple(factors[n].get(p, 0) for p in primes) for n in values}
    d = _rank(list(vectors.values()))
    basis = _independent_basis(list(vectors.values()))

    candidates = [v for v in _candidate_vectors(vectors) if _solve_rational(basis, v) is not None]

    def value_of(vec: Tuple[int, ...]) -> int:
        return math.prod(p**e for p, e in zip(primes, vec))

    candidates.sort(key=value_of)
    total = math.comb(len(candidates), d)
    if total > settings.max_combinations:
        raise SearchBoundExceeded(
            "Too many candidate generator subsets",
            {"subsets": total, "cap": settings.max_combinations, "candidates": len(candidates)},
        )

    sets: List[GeneratingSet] = []
    for combo in itertools.combinations(candidates, d):
        exponent_map: Dict[int, Tuple[int, ...]] = {}
        for n in values:
            solution = _solve_rational(combo, vectors[n])
            if solution is None or any(x.denominator != 1 or x < 0 for x in solution):
                break
            exponent_map[n] = tuple(int(x) for x in solution)
        else:
            sets.append(GeneratingSet(generators=[value_of(v) for v in combo], exponent_map=exponent_map))

    logger.debug(
        "Generating-set search finished",
        frequencies=values,
        dimension=d,
        candidates=len(candidates),
        sets=len(sets),
    )
    return d, sets


def optimal_generating_set(sets: Sequence[GeneratingSet]) -> GeneratingSet:
    """Degree minimizer; ties go to the lexicographically smallest generator list."""
    return min(sets, key=lambda s: (s.degree(), s.generators))


def profile_with_range(
    sym: DirichletSymbol, config: Optional[BoundarySearchConfig] = None
) -> Tuple[SymbolProfile, BohrLift, RangeAnalysis]:
    """
    Structural profile together with the lift and range analysis it was derived from.

    For c0 >= 1 the lift carries phi_0 without the 1/2 shift.
    """
    if sym.is_constant():
        d = 0
        sets = [GeneratingSet(generators=[], exponent_map={})]
    else:
        d, sets = complex_dimension(sym.support())
    gen = optimal_generating_set(sets)

    phi = lift(sym, gen) if sym.c0 == 0 else lift_phi0(sym, gen)
    analysis = range_analysis(phi, config=config, strict=False)

    tol = config.tol if config and config.tol is not None else settings.boundary_tol
    if sym.c0 == 0:
        class_member = analysis.min_re >= -tol and not (sym.is_constant() and analysis.min_re <= tol)
    else:
        class_member = analysis.min_re >= -tol

    profile = SymbolProfile(
        characteristic=sym.c0,
        dimension=d,
        all_minimal_sets=sets,
        optimal_set=gen,
        degree=gen.degree(),
        range_kind=analysis.range_kind,
        class_member=class_member,
        min_re=analysis.min_re,
        separated=d >= 1 and phi.is_separated(),
    )
    return profile, phi, analysis


def degree_profile(sym: DirichletSymbol, config: Optional[BoundarySearchConfig] = None) -> SymbolProfile:
    """Dimension, minimal generating sets, optimal degree and range data of a symbol."""
    profile, _, _ = profile_with_range(sym, config)
    return profile


def theorem1_verdict(sym: DirichletSymbol, range_kind: RangeKind) -> CompactnessVerdict:
    """For c0 >= 1 the operator is compact exactly when the range is restricted."""
    if sym.c0 < 1:
        raise PreconditionError("Characteristic rule needs c0 >= 1", {"c0": sym.c0})
    verdict = Verdict.COMPACT if range_kind == RangeKind.RESTRICTED else Verdict.NON_COMPACT
    return CompactnessVerdict(verdict=verdict, rule="Thm1")


def first_primes(count: int) -> List[int]:
    return [int(sympy.prime(i)) for i in range(1, count + 1)]


def symbol_from_lift(phi: BohrLift, generators: Optional[Sequence[int]] = None) -> DirichletSymbol:
    """
    Map a Bohr lift back to a symbol with c0 = 0 and c1 = Phi(0) + 1/2.

    Args:
        phi: Lift to convert
        generators: Q-independent generators, default the first d primes

    Returns:
        Symbol whose lift over ``generators`` is ``phi``
    """
    gens = list(generators) if generators is not None else first_primes(phi.dim)
    if len(gens) != phi.dim:
        raise PreconditionError("Generator count must match the lift dimension", {"generators": gens})
    if gens:
        vectors = [factorize(q).entries for q in gens]
        primes = sorted(set().union(*(v.keys() for v in vectors)))
        rows = [tuple(v.get(p, 0) for p in primes) for v in vectors]
        if _rank(rows) != len(gens):
            raise PreconditionError("Generators are not Q-independent", {"generators": gens})

    c1 = _to_exact_pair(phi.constant)
    c1 = (c1[0] + Fraction(1, 2), c1[1])
    terms: Dict[int, ExactPair] = {}
    for alpha, value in phi.terms.items():
        n = math.prod(q**e for q, e in zip(gens, alpha))
        pair = _to_exact_pair(value)
        if n == 1:
            c1 = (c1[0] + pair[0], c1[1] + pair[1])
        else:
            terms[n] = pair
    return _assemble(0, c1, terms)
