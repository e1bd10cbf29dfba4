"""Benchmark data: synthetic regression generators, exhaustive circuit
truth tables, seeded train/test splitting, and CSV ingestion/export.

Synthetic regression targets follow the usual published definitions of
the Keijzer / Nguyen / Vladislavleva / Korns families; sampling ranges
are documented per generator below.  Real-world regression data is not
bundled, load it from CSV.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

DOMAIN_REAL_SR = "real_sr"
DOMAIN_CIRCUIT = "circuit"
_DOMAINS = (DOMAIN_REAL_SR, DOMAIN_CIRCUIT)


class UnknownBenchmark(ValueError):
    pass


class UnknownCircuit(ValueError):
    pass


class SplitTooSmall(ValueError):
    """A train/test side would be empty."""


class CsvParseError(ValueError):
    pass


class NonNumericCell(CsvParseError):
    pass


@dataclass(frozen=True)
class TestCase:
    """One (input vector, expected output vector) pair."""

    __test__ = False  # keep pytest from collecting this as a test class

    inputs: tuple
    outputs: tuple


@dataclass(eq=False)
class Dataset:
    """An ordered, immutable collection of test cases of uniform arity."""

    name: str
    domain: str
    cases: tuple[TestCase, ...]
    feature_count: int
    output_count: int

    def __post_init__(self) -> None:
        if self.domain not in _DOMAINS:
            raise ValueError(f"domain must be one of {_DOMAINS}")
        if not self.cases:
            raise ValueError("dataset has no cases")
        for case in self.cases:
            if len(case.inputs) != self.feature_count:
                raise ValueError("inconsistent input arity")
            if len(case.outputs) != self.output_count:
                raise ValueError("inconsistent output arity")
            if self.domain == DOMAIN_CIRCUIT:
                if any(v not in (0, 1) for v in case.inputs + case.outputs):
                    raise ValueError("circuit values must be 0 or 1")

    def __len__(self) -> int:
        return len(self.cases)

    @cached_property
    def inputs_matrix(self) -> np.ndarray:
        return np.array([c.inputs for c in self.cases], dtype=float)

    @cached_property
    def outputs_matrix(self) -> np.ndarray:
        return np.array([c.outputs for c in self.cases], dtype=float)

    def subset(self, indices, name: str | None = None) -> "Dataset":
        cases = tuple(self.cases[i] for i in indices)
        return Dataset(
            name=name or f"{self.name}-subset",
            domain=self.domain,
            cases=cases,
            feature_count=self.feature_count,
            output_count=self.output_count,
        )


def _make_dataset(name, domain, X, Y) -> Dataset:
    X = np.asarray(X)
    Y = np.asarray(Y)
    if Y.ndim == 1:
        Y = Y[:, None]
    if domain == DOMAIN_CIRCUIT:
        cast = int
    else:
        cast = float
    cases = tuple(
        TestCase(tuple(cast(v) for v in x), tuple(cast(v) for v in y))
        for x, y in zip(X, Y)
    )
    return Dataset(name, domain, cases, X.shape[1], Y.shape[1])


# ---------------------------------------------------------------------------
# synthetic symbolic-regression benchmarks


def _grid(lo: float, hi: float, step: float) -> np.ndarray:
    n = int(math.floor((hi - lo) / step + 0.5)) + 1
    return np.linspace(lo, lo + step * (n - 1), n)


def _mesh(*axes: np.ndarray) -> np.ndarray:
    grids = np.meshgrid(*axes, indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=1)


def _keijzer4(rng):
    # f(x) = x^3 e^-x cos(x) sin(x) (sin(x)^2 cos(x) - 1); grid [0,10] step .05
    # plus the same grid shifted by one half step
    x = np.concatenate([_grid(0.0, 10.0, 0.05), _grid(0.05, 10.05, 0.05)])
    X = x[:, None]
    y = x**3 * np.exp(-x) * np.cos(x) * np.sin(x) * (np.sin(x) ** 2 * np.cos(x) - 1)
    return X, y


def _keijzer9(rng):
    # arcsinh: f(x) = ln(x + sqrt(x^2 + 1)); grids [0,100] step 1 and step 0.1
    x = np.concatenate([_grid(0.0, 100.0, 1.0), _grid(0.0, 100.0, 0.1)])
    X = x[:, None]
    y = np.log(x + np.sqrt(x * x + 1.0))
    return X, y


def _keijzer10(rng):
    # f(x, y) = x^y; 100 uniform points in [0,1]^2 plus the 0.01 grid
    train = rng.uniform(0.0, 1.0, size=(100, 2))
    g = _grid(0.0, 1.0, 0.01)
    X = np.vstack([train, _mesh(g, g)])
    y = X[:, 0] ** X[:, 1]
    return X, y


def _keijzer14(rng):
    # f(x, y) = 8 / (2 + x^2 + y^2); 20 uniform in [-3,3]^2 plus the 0.1 grid
    train = rng.uniform(-3.0, 3.0, size=(20, 2))
    g = _grid(-3.0, 3.0, 0.1)
    X = np.vstack([train, _mesh(g, g)])
    y = 8.0 / (2.0 + X[:, 0] ** 2 + X[:, 1] ** 2)
    return X, y


def _keijzer5(rng):
    # f(x, y, z) = 30 x z / ((x - 10) y^2); x,z in [-1,1], y in [1,2]
    def block(n):
        return np.column_stack(
            [
                rng.uniform(-1.0, 1.0, n),
                rng.uniform(1.0, 2.0, n),
                rng.uniform(-1.0, 1.0, n),
            ]
        )

    X = np.vstack([block(1000), block(10000)])
    y = 30.0 * X[:, 0] * X[:, 2] / ((X[:, 0] - 10.0) * X[:, 1] ** 2)
    return X, y


def _nguyen9(rng):
    # f(x, y) = sin(x) + sin(y^2); uniform in [0,1]^2
    X = rng.uniform(0.0, 1.0, size=(1020, 2))
    y = np.sin(X[:, 0]) + np.sin(X[:, 1] ** 2)
    return X, y


def _nguyen10(rng):
    # f(x, y) = 2 sin(x) cos(y); uniform in [0,1]^2
    X = rng.uniform(0.0, 1.0, size=(1020, 2))
    y = 2.0 * np.sin(X[:, 0]) * np.cos(X[:, 1])
    return X, y


def _vladislavleva5(rng):
    # f = 30 (x1-1)(x3-1) / (x2^2 (x1-10)); 300 uniform points plus a grid
    train = np.column_stack(
        [
            rng.uniform(0.05, 2.0, 300),
            rng.uniform(1.0, 2.0, 300),
            rng.uniform(0.05, 2.0, 300),
        ]
    )
    g13 = _grid(-0.05, 2.1, 0.15)
    g2 = _grid(0.95, 2.05, 0.1)
    X = np.vstack([train, _mesh(g13, g2, g13)])
    y = 30.0 * (X[:, 0] - 1.0) * (X[:, 2] - 1.0) / (X[:, 1] ** 2 * (X[:, 0] - 10.0))
    return X, y


def _korns11(rng):
    # f = 6.87 + 11 cos(7.23 x^3); five uniform features in [-50,50]
    X = rng.uniform(-50.0, 50.0, size=(20000, 5))
    y = 6.87 + 11.0 * np.cos(7.23 * X[:, 0] ** 3)
    return X, y


def _korns12(rng):
    # f = 2 - 2.1 cos(9.8 x) sin(1.3 w); five uniform features in [-50,50]
    X = rng.uniform(-50.0, 50.0, size=(20000, 5))
    y = 2.0 - 2.1 * np.cos(9.8 * X[:, 0]) * np.sin(1.3 * X[:, 4])
    return X, y


#: benchmark id -> (generator, feature count, instance count)
SYNTHETIC_SR = {
    "keijzer-4": (_keijzer4, 1, 402),
    "keijzer-9": (_keijzer9, 1, 1102),
    "keijzer-10": (_keijzer10, 2, 10301),
    "keijzer-14": (_keijzer14, 2, 3741),
    "nguyen-9": (_nguyen9, 2, 1020),
    "nguyen-10": (_nguyen10, 2, 1020),
    "keijzer-5": (_keijzer5, 3, 11000),
    "vladislavleva-5": (_vladislavleva5, 3, 3000),
    "korns-11": (_korns11, 5, 20000),
    "korns-12": (_korns12, 5, 20000),
}


def gen_synthetic_sr(benchmark_id: str, rng_seed: int = 0) -> Dataset:
    """Generate one of the synthetic regression benchmarks.

    Deterministic given ``(benchmark_id, rng_seed)``.
    """
    key = benchmark_id.strip().lower()
    if key not in SYNTHETIC_SR:
        raise UnknownBenchmark(
            f"unknown benchmark {benchmark_id!r}; choose one of "
            + ", ".join(sorted(SYNTHETIC_SR))
        )
    generator, n_features, n_instances = SYNTHETIC_SR[key]
    rng = np.random.default_rng(rng_seed)
    X, y = generator(rng)
    assert X.shape == (n_instances, n_features)
    return _make_dataset(key, DOMAIN_REAL_SR, X, y)


# ---------------------------------------------------------------------------
# digital circuits (exhaustive truth tables, ascending binary input order)


def _bits(value: int, width: int) -> tuple[int, ...]:
    return tuple((value >> (width - 1 - i)) & 1 for i in range(width))


def _comparator5_row(v: int):
    a, b = (v >> 5) & 0x1F, v & 0x1F
    return _bits(v, 10), (int(a > b), int(a == b), int(a < b))


def _parity5_row(v: int):
    bits = _bits(v, 5)
    out = 0
    for b in bits:
        out ^= b
    return bits, (out,)


def _mux11_row(v: int):
    bits = _bits(v, 11)
    select = (bits[0] << 2) | (bits[1] << 1) | bits[2]
    return bits, (bits[3 + select],)


def _alu_row(v: int):
    control = (v >> 10) & 0x3
    a, b = (v >> 5) & 0x1F, v & 0x1F
    if control == 0:
        result = (a + b) & 0x1F
    elif control == 1:
        result = (a - b) & 0x1F
    elif control == 2:
        result = a & b
    else:
        result = a | b
    return _bits(v, 12), _bits(result, 5)


#: circuit id -> (row function, input bits, output bits)
CIRCUITS = {
    "comparator5": (_comparator5_row, 10, 3),
    "parity5": (_parity5_row, 5, 1),
    "mux11": (_mux11_row, 11, 1),
    "alu": (_alu_row, 12, 5),
}


def gen_circuit(circuit_id: str) -> Dataset:
    """Exhaustive truth table for one of the benchmark circuits.

    Input layout conventions: bit 0 is the most significant bit of the
    row index.  The comparator compares A = bits[0:5] with B = bits[5:10]
    and outputs the one-hot triple (A>B, A=B, A<B).  The multiplexer uses
    the 3 high-order bits as the select value over the 8 data bits.  The
    ALU takes a 2-bit control (00 add, 01 subtract, 10 AND, 11 OR) and
    two 5-bit operands; arithmetic wraps around to 5 bits.
    """
    key = circuit_id.strip().lower()
    if key not in CIRCUITS:
        raise UnknownCircuit(
            f"unknown circuit {circuit_id!r}; choose one of " + ", ".join(sorted(CIRCUITS))
        )
    row_fn, n_in, n_out = CIRCUITS[key]
    rows = [row_fn(v) for v in range(2**n_in)]
    cases = tuple(TestCase(inp, out) for inp, out in rows)
    return Dataset(key, DOMAIN_CIRCUIT, cases, n_in, n_out)


# ---------------------------------------------------------------------------
# splitting and CSV


def split_train_test(
    dataset: Dataset, train_fraction: float, rng_seed: int = 0
) -> tuple[Dataset, Dataset]:
    """Seeded uniform shuffle followed by a ceil split.

    The training side receives ``ceil(train_fraction * N)`` cases (with a
    1e-9 snap against float noise) and the test side the remainder; the
    two sides partition the dataset.
    """
    if not 0.0 < train_fraction < 1.0:
        raise ValueError("train_fraction must be in (0, 1)")
    n = len(dataset)
    n_train = math.ceil(round(train_fraction * n, 9))
    n_test = n - n_train
    if n_train < 1 or n_test < 1:
        raise SplitTooSmall(f"cannot split {n} cases at fraction {train_fraction}")
    rng = np.random.default_rng(rng_seed)
    order = rng.permutation(n)
    train_idx = sorted(int(i) for i in order[:n_train])
    test_idx = sorted(int(i) for i in order[n_train:])
    return (
        dataset.subset(train_idx, f"{dataset.name}-train"),
        dataset.subset(test_idx, f"{dataset.name}-test"),
    )


def _parse_cell(text: str, row: int, col: int) -> float:
    try:
        return float(text)
    except ValueError:
        raise NonNumericCell(f"non-numeric cell {text!r} at row {row}, column {col}") from None


def _read_rows(path, header: bool):
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        rows = list(reader)
    names = None
    if header:
        if not rows:
            raise CsvParseError(f"{path}: empty file")
        names = [c.strip() for c in rows[0]]
        rows = rows[1:]
    if not rows:
        raise CsvParseError(f"{path}: no data rows")
    width = len(rows[0])
    values = []
    for r, row in enumerate(rows):
        if len(row) != width:
            raise CsvParseError(f"{path}: row {r} has {len(row)} cells, expected {width}")
        values.append([_parse_cell(cell, r, c) for c, cell in enumerate(row)])
    return names, values


def load_csv(
    path, target_column: int | str = -1, *, header: bool = False, name: str | None = None
) -> Dataset:
    """Load a regression dataset from CSV.

    ``target_column`` selects the output column by index (negative counts
    from the end) or by header name; every other column becomes a feature
    in file order.
    """
    names, values = _read_rows(path, header)
    width = len(values[0])
    if isinstance(target_column, str):
        if names is None:
            raise CsvParseError("column names require header=True")
        try:
            target = names.index(target_column)
        except ValueError:
            raise CsvParseError(f"no column named {target_column!r}") from None
    else:
        target = target_column % width
    X = [[v for c, v in enumerate(row) if c != target] for row in values]
    y = [[row[target]] for row in values]
    return _make_dataset(name or Path(path).stem, DOMAIN_REAL_SR, X, y)


def load_circuit_csv(
    path, output_count: int = 1, *, header: bool = False, name: str | None = None
) -> Dataset:
    """Load a bit-valued dataset; the last ``output_count`` columns are outputs."""
    _, values = _read_rows(path, header)
    width = len(values[0])
    if not 0 < output_count < width:
        raise CsvParseError("output_count must leave at least one input column")
    for r, row in enumerate(values):
        for c, v in enumerate(row):
            if v not in (0.0, 1.0):
                raise NonNumericCell(f"non-bit cell {v!r} at row {r}, column {c}")
    X = [[int(v) for v in row[: width - output_count]] for row in values]
    y = [[int(v) for v in row[width - output_count :]] for row in values]
    return _make_dataset(name or Path(path).stem, DOMAIN_CIRCUIT, X, y)


def save_csv(dataset: Dataset, path, *, header: bool = True) -> None:
    """Write a dataset as CSV, input columns first, then output columns."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        if header:
            writer.writerow(
                [f"x{i}" for i in range(dataset.feature_count)]
                + [f"y{i}" for i in range(dataset.output_count)]
            )
        for case in dataset.cases:
            writer.writerow([repr(v) for v in case.inputs + case.outputs])
