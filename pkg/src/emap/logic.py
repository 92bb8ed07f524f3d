"""Boolean two-modality functions: representability and additive fit quality.

A boolean function of n text bits and n visual bits is a 2^n x 2^n truth
table.  It is *additively representable* when some per-row reals tau, per
-column reals phi and threshold theta reproduce it as
``table[i, j] = 1  iff  tau[i] + phi[j] > theta``.  Such threshold matrices
are exactly the tables with no 2x2 exclusive-or submatrix, equivalently the
tables whose rows form a chain under elementwise <=; that combinatorial
check is the fast path here, and an exact linear-feasibility solve is the
independent oracle.

The additive-fit experiment measures how well three additive surrogates
rank the cells of random tables: the least-squares additive projection of
the table itself, unimodal-restricted AdaBoost, and (as the interactive
reference) unrestricted AdaBoost.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

from .boosting import (
    AdaBoostConfig,
    full_boost_round,
    init_boost_state,
    unimodal_restricted_boost_round,
)
from .exceptions import (
    CapabilityError,
    GenerationError,
    InputError,
    NumericError,
    UndefinedMetricError,
)
from .grid import ScoreGrid, emap_decompose
from .metrics import auc_binary

__all__ = [
    "BooleanTable",
    "Var",
    "Not",
    "And",
    "Or",
    "parse_formula",
    "table_from_formula",
    "is_representable",
    "representable_oracle",
    "sample_table",
    "random_circuit",
    "additive_fit_auc",
    "SweepRow",
    "run_size_sweep",
    "write_sweep_csv",
]

ORACLE_SIDE_LIMIT = 16
SWEEP_METHODS = ("emap", "adaboost_unimodal", "adaboost_full")


@dataclass(frozen=True, eq=False)
class BooleanTable:
    """Truth table of f(t, v) with n bits per modality; rows index t."""

    n: int
    table: np.ndarray

    def __post_init__(self):
        table = np.asarray(self.table, dtype=np.uint8)
        size = 2**self.n
        if self.n < 1:
            raise InputError("n must be >= 1")
        if table.shape != (size, size):
            raise InputError(f"table must be {size} x {size} for n={self.n}, got {table.shape}")
        if not np.isin(table, (0, 1)).all():
            raise InputError("table entries must be 0 or 1")
        object.__setattr__(self, "table", table)

    @property
    def is_constant(self) -> bool:
        return bool(np.all(self.table == self.table.flat[0]))

    def transpose(self) -> "BooleanTable":
        return BooleanTable(self.n, self.table.T)

    def complement(self) -> "BooleanTable":
        return BooleanTable(self.n, 1 - self.table)


# ---------------------------------------------------------------------------
# Formula parsing.  Grammar (precedence NOT > AND > OR, left-associative):
#   or   := and ('|' and)*
#   and  := not ('&' not)*
#   not  := '!' not | var | '(' or ')'
# Unicode aliases: NOT ¬, AND ∧, OR ∨.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Var:
    side: str  # "t" or "v"
    index: int  # 1-based


@dataclass(frozen=True)
class Not:
    child: object


@dataclass(frozen=True)
class And:
    left: object
    right: object


@dataclass(frozen=True)
class Or:
    left: object
    right: object


_ALIASES = {"¬": "!", "∧": "&", "∨": "|"}


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    i = 0
    while i < len(text):
        ch = _ALIASES.get(text[i], text[i])
        if ch.isspace():
            i += 1
            continue
        if ch in "!&|()":
            tokens.append((ch, ch, i))
            i += 1
            continue
        if ch in "tv":
            j = i + 1
            while j < len(text) and text[j].isdigit():
                j += 1
            if j == i + 1:
                raise InputError(f"expected a variable index after {ch!r} at position {i}")
            index = int(text[i + 1 : j])
            if index < 1:
                raise InputError(f"variable indices start at 1, got {text[i:j]!r} at position {i}")
            tokens.append(("var", text[i:j], i))
            i = j
            continue
        raise InputError(f"unexpected character {text[i]!r} at position {i}")
    return tokens


def parse_formula(text: str):
    """Parse a boolean formula over variables t1..tn, v1..vn."""
    tokens = _tokenize(text)
    pos = 0

    def peek():
        return tokens[pos][0] if pos < len(tokens) else None

    def take(expected: str | None = None):
        nonlocal pos
        if pos >= len(tokens):
            raise InputError(f"unexpected end of input at position {len(text)}")
        kind, value, at = tokens[pos]
        if expected is not None and kind != expected:
            raise InputError(f"expected {expected!r} but found {value!r} at position {at}")
        pos += 1
        return kind, value, at

    def parse_or():
        node = parse_and()
        while peek() == "|":
            take()
            node = Or(node, parse_and())
        return node

    def parse_and():
        node = parse_not()
        while peek() == "&":
            take()
            node = And(node, parse_not())
        return node

    def parse_not():
        if peek() == "!":
            take()
            return Not(parse_not())
        if peek() == "(":
            take()
            node = parse_or()
            take(")")
            return node
        kind, value, at = take()
        if kind != "var":
            raise InputError(f"expected a variable or '(' but found {value!r} at position {at}")
        return Var(side=value[0], index=int(value[1:]))

    node = parse_or()
    if pos < len(tokens):
        kind, value, at = tokens[pos]
        raise InputError(f"unexpected trailing token {value!r} at position {at}")
    return node


def formula_max_index(ast) -> int:
    if isinstance(ast, Var):
        return ast.index
    if isinstance(ast, Not):
        return formula_max_index(ast.child)
    return max(formula_max_index(ast.left), formula_max_index(ast.right))


def _eval_formula(ast, t_bits: np.ndarray, v_bits: np.ndarray) -> np.ndarray:
    if isinstance(ast, Var):
        bits = t_bits if ast.side == "t" else v_bits
        return bits[..., ast.index - 1].astype(bool)
    if isinstance(ast, Not):
        return ~_eval_formula(ast.child, t_bits, v_bits)
    if isinstance(ast, And):
        return _eval_formula(ast.left, t_bits, v_bits) & _eval_formula(ast.right, t_bits, v_bits)
    if isinstance(ast, Or):
        return _eval_formula(ast.left, t_bits, v_bits) | _eval_formula(ast.right, t_bits, v_bits)
    raise InputError(f"unknown formula node {type(ast).__name__}")


def bit_patterns(n: int) -> np.ndarray:
    """All 2^n assignments as an array of shape (2^n, n); bit 0 is variable 1."""
    idx = np.arange(2**n)
    return ((idx[:, np.newaxis] >> np.arange(n)) & 1).astype(np.float64)


def table_from_formula(ast, n: int) -> BooleanTable:
    """Evaluate a formula on all 2^(2n) assignments; rows index the text bits."""
    needed = formula_max_index(ast)
    if needed > n:
        raise InputError(f"formula uses variable index {needed} but n={n}")
    size = 2**n
    patterns = bit_patterns(n).astype(np.int64)
    t_bits = patterns[:, np.newaxis, :]  # (size, 1, n)
    v_bits = patterns[np.newaxis, :, :]  # (1, size, n)
    values = _eval_formula(ast, t_bits, v_bits)
    table = np.broadcast_to(values, (size, size)).astype(np.uint8)
    return BooleanTable(n=n, table=table.copy())


# ---------------------------------------------------------------------------
# Representability.
# ---------------------------------------------------------------------------


def _coerce_table(table) -> np.ndarray:
    if isinstance(table, BooleanTable):
        return table.table
    arr = np.asarray(table, dtype=np.uint8)
    if arr.ndim != 2:
        raise InputError("table must be 2-D")
    return arr


def is_representable(table) -> bool:
    """Fast combinatorial check for threshold representability.

    True iff no 2x2 submatrix is an exclusive-or pattern, i.e. the rows form
    a chain under elementwise <=.  Rows are sorted by their number of ones;
    in a chain that order respects inclusion, so it suffices to check that
    each row is contained in the next.
    """
    rows = _coerce_table(table).astype(bool)
    order = np.argsort(rows.sum(axis=1), kind="stable")
    sorted_rows = rows[order]
    smaller, larger = sorted_rows[:-1], sorted_rows[1:]
    return not bool(np.any(smaller & ~larger))


def representable_oracle(table) -> bool:
    """Exact feasibility solve for the threshold system (independent oracle).

    Searches for tau, phi, theta with ``tau_i + phi_j >= theta + 1`` on
    1-cells and ``tau_i + phi_j <= theta`` on 0-cells; the system is
    scale-free, so the unit margin loses no generality.  Limited to tables
    with at most 16 rows/columns per side.
    """
    arr = _coerce_table(table)
    n_rows, n_cols = arr.shape
    if n_rows > ORACLE_SIDE_LIMIT or n_cols > ORACLE_SIDE_LIMIT:
        raise CapabilityError(
            f"oracle limited to {ORACLE_SIDE_LIMIT} rows/columns per side, got {arr.shape}"
        )
    n_vars = n_rows + n_cols + 1  # tau, phi, theta
    rows_a = []
    rhs = []
    for i in range(n_rows):
        for j in range(n_cols):
            coef = np.zeros(n_vars)
            if arr[i, j]:
                coef[i] = -1.0
                coef[n_rows + j] = -1.0
                coef[-1] = 1.0
                rhs.append(-1.0)
            else:
                coef[i] = 1.0
                coef[n_rows + j] = 1.0
                coef[-1] = -1.0
                rhs.append(0.0)
            rows_a.append(coef)
    result = linprog(
        c=np.zeros(n_vars),
        A_ub=np.asarray(rows_a),
        b_ub=np.asarray(rhs),
        bounds=[(None, None)] * n_vars,
        method="highs",
    )
    if result.status == 0:
        return True
    if result.status == 2:
        return False
    raise NumericError(f"feasibility solve failed with status {result.status}: {result.message}")


# ---------------------------------------------------------------------------
# Sampling.
# ---------------------------------------------------------------------------


def random_circuit(n: int, rng: np.random.Generator, max_depth: int = 6):
    """Random AND/OR/NOT formula tree over t1..tn, v1..vn."""
    if max_depth <= 0 or rng.random() < 0.3:
        side = "t" if rng.random() < 0.5 else "v"
        leaf = Var(side=side, index=int(rng.integers(1, n + 1)))
        return Not(leaf) if rng.random() < 0.5 else leaf
    gate = And if rng.random() < 0.5 else Or
    return gate(random_circuit(n, rng, max_depth - 1), random_circuit(n, rng, max_depth - 1))


def sample_table(
    n: int,
    seed,
    require_nonconstant: bool = False,
    sampler: str = "uniform",
    circuit_depth: int = 6,
) -> BooleanTable:
    """Draw a random truth table.

    ``sampler="uniform"`` draws every cell independently (the default
    measure for the collapse experiments); ``sampler="circuit"`` evaluates a
    random bounded-depth gate tree instead, for sensitivity analysis.
    """
    if n < 1:
        raise InputError("n must be >= 1")
    rng = np.random.default_rng(seed)
    size = 2**n
    for _ in range(1000):
        if sampler == "uniform":
            table = BooleanTable(n, rng.integers(0, 2, size=(size, size), dtype=np.uint8))
        elif sampler == "circuit":
            table = table_from_formula(random_circuit(n, rng, circuit_depth), n)
        else:
            raise InputError(f"unknown sampler {sampler!r}")
        if not require_nonconstant or not table.is_constant:
            return table
    raise GenerationError("could not sample a nonconstant table in 1000 attempts")


# ---------------------------------------------------------------------------
# Additive fit quality.
# ---------------------------------------------------------------------------


def _cell_dataset(table: BooleanTable):
    patterns = bit_patterns(table.n)
    size = patterns.shape[0]
    rows = np.repeat(np.arange(size), size)
    cols = np.tile(np.arange(size), size)
    return patterns[rows], patterns[cols], table.table.ravel().astype(np.int64)


def _boost_train_auc(table: BooleanTable, restriction: str, cfg: AdaBoostConfig) -> float:
    X_t, X_v, y = _cell_dataset(table)
    state = init_boost_state(X_t, X_v, y, cfg.max_depth)
    step = full_boost_round if restriction == "full" else unimodal_restricted_boost_round
    for _ in range(cfg.n_stages):
        step(state)
        if state.stop_reason is not None:
            break
    return auc_binary(state.scores, y)


def additive_fit_auc(table: BooleanTable, method: str, cfg: AdaBoostConfig | None = None) -> float:
    """Train-set AUC of an additive (or reference) fit of the whole table.

    ``emap`` projects the 0/1 table onto the additive family and ranks cells
    by the reconstructed scores; the adaboost methods train on all cells
    with the raw bits as features and report training AUC.
    """
    if table.is_constant:
        raise UndefinedMetricError("AUC is undefined for a constant table")
    if method == "emap":
        grid = ScoreGrid(values=table.table.astype(np.float64)[:, :, np.newaxis])
        recon = emap_decompose(grid).reconstruct()[:, :, 0]
        return auc_binary(recon.ravel(), table.table.ravel())
    if method in ("adaboost_unimodal", "adaboost_full"):
        cfg = cfg or AdaBoostConfig()
        return _boost_train_auc(table, method.removeprefix("adaboost_"), cfg)
    raise InputError(f"unknown method {method!r}")


@dataclass(frozen=True)
class SweepRow:
    n: int
    method: str
    mean_auc: float
    std_auc: float
    samples: int


def run_size_sweep(
    n_values,
    samples_per_n: int,
    seed: int,
    methods: tuple[str, ...] = SWEEP_METHODS,
    cfg: AdaBoostConfig | None = None,
    sampler: str = "uniform",
) -> list[SweepRow]:
    """Mean/std additive-fit AUC per problem size for each method.

    Each sample's RNG is derived from (seed, n, sample index), so results do
    not depend on evaluation order and samples may be computed in parallel.
    Only nonconstant tables are drawn.
    """
    if samples_per_n < 1:
        raise InputError("samples_per_n must be >= 1")
    rows = []
    for n in n_values:
        scores = {m: np.empty(samples_per_n) for m in methods}
        for i in range(samples_per_n):
            table = sample_table(
                n,
                np.random.SeedSequence([seed, n, i]),
                require_nonconstant=True,
                sampler=sampler,
            )
            for m in methods:
                scores[m][i] = additive_fit_auc(table, m, cfg)
        for m in methods:
            rows.append(
                SweepRow(
                    n=n,
                    method=m,
                    mean_auc=float(scores[m].mean()),
                    std_auc=float(scores[m].std()),
                    samples=samples_per_n,
                )
            )
    return rows


def write_sweep_csv(rows: list[SweepRow], path) -> None:
    lines = ["n,method,mean_auc,std_auc,samples"]
    for row in rows:
        lines.append(f"{row.n},{row.method},{row.mean_auc!r},{row.std_auc!r},{row.samples}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
