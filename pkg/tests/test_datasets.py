import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from gedbs.datasets import (
    CIRCUITS,
    SYNTHETIC_SR,
    CsvParseError,
    Dataset,
    NonNumericCell,
    SplitTooSmall,
    TestCase,
    UnknownBenchmark,
    UnknownCircuit,
    gen_circuit,
    gen_synthetic_sr,
    load_circuit_csv,
    load_csv,
    save_csv,
    split_train_test,
)

TABLE_SYNTHETIC = {
    "keijzer-4": (1, 402),
    "keijzer-9": (1, 1102),
    "keijzer-10": (2, 10301),
    "keijzer-14": (2, 3741),
    "nguyen-9": (2, 1020),
    "nguyen-10": (2, 1020),
    "keijzer-5": (3, 11000),
    "vladislavleva-5": (3, 3000),
    "korns-11": (5, 20000),
    "korns-12": (5, 20000),
}

TABLE_CIRCUITS = {
    "comparator5": (10, 3, 1024),
    "parity5": (5, 1, 32),
    "mux11": (11, 1, 2048),
    "alu": (12, 5, 4096),
}


@pytest.mark.parametrize("benchmark_id,expected", sorted(TABLE_SYNTHETIC.items()))
def test_synthetic_dimensions(benchmark_id, expected):
    features, instances = expected
    data = gen_synthetic_sr(benchmark_id, rng_seed=0)
    assert data.feature_count == features
    assert len(data) == instances
    assert data.output_count == 1
    assert data.domain == "real_sr"


def test_synthetic_registry_complete():
    assert set(SYNTHETIC_SR) == set(TABLE_SYNTHETIC)


def test_synthetic_deterministic():
    a = gen_synthetic_sr("nguyen-9", rng_seed=5)
    b = gen_synthetic_sr("nguyen-9", rng_seed=5)
    assert a.cases == b.cases
    c = gen_synthetic_sr("nguyen-9", rng_seed=6)
    assert c.cases != a.cases


def test_synthetic_targets_spot_checked():
    # keijzer-4 first grid point is x=0 -> y=0
    k4 = gen_synthetic_sr("keijzer-4", rng_seed=0)
    assert k4.cases[0].inputs == (0.0,)
    assert k4.cases[0].outputs == (0.0,)
    # keijzer-9 is arcsinh: check a handful of rows against math.asinh
    k9 = gen_synthetic_sr("keijzer-9", rng_seed=0)
    for case in k9.cases[:50]:
        assert case.outputs[0] == pytest.approx(math.asinh(case.inputs[0]), abs=1e-12)
    # korns-12 formula at sampled rows
    k12 = gen_synthetic_sr("korns-12", rng_seed=1)
    for case in k12.cases[:20]:
        x, w = case.inputs[0], case.inputs[4]
        assert case.outputs[0] == pytest.approx(
            2.0 - 2.1 * math.cos(9.8 * x) * math.sin(1.3 * w), rel=1e-12
        )


def test_unknown_benchmark():
    with pytest.raises(UnknownBenchmark):
        gen_synthetic_sr("keijzer-99", 0)


@pytest.mark.parametrize("circuit_id,expected", sorted(TABLE_CIRCUITS.items()))
def test_circuit_dimensions(circuit_id, expected):
    n_in, n_out, rows = expected
    data = gen_circuit(circuit_id)
    assert data.feature_count == n_in
    assert data.output_count == n_out
    assert len(data) == rows
    assert data.domain == "circuit"


def test_circuit_registry_complete():
    assert set(CIRCUITS) == set(TABLE_CIRCUITS)


def test_truth_tables_exhaustive_and_ascending():
    for circuit_id, (n_in, _, rows) in TABLE_CIRCUITS.items():
        data = gen_circuit(circuit_id)
        values = [
            sum(bit << (n_in - 1 - i) for i, bit in enumerate(case.inputs))
            for case in data.cases
        ]
        assert values == list(range(rows))  # exhaustive, duplicate-free, ascending


def test_parity_rows():
    data = gen_circuit("parity5")
    assert data.cases[0].inputs == (0, 0, 0, 0, 0)
    assert data.cases[0].outputs == (0,)
    for case in data.cases:
        assert case.outputs[0] == sum(case.inputs) % 2


def test_comparator_equal_operands_one_hot():
    data = gen_circuit("comparator5")
    # A = B = 10101
    row = data.cases[0b10101_10101]
    assert row.inputs == (1, 0, 1, 0, 1, 1, 0, 1, 0, 1)
    assert row.outputs == (0, 1, 0)


def test_comparator_all_rows_against_integer_oracle():
    data = gen_circuit("comparator5")
    for v, case in enumerate(data.cases):
        a, b = v >> 5, v & 31
        assert case.outputs == (int(a > b), int(a == b), int(a < b))


def test_alu_wraparound_addition_example():
    data = gen_circuit("alu")
    # control=00, A=11111, B=00001 -> 00000
    row = data.cases[0b00_11111_00001]
    assert row.outputs == (0, 0, 0, 0, 0)


def test_alu_all_rows_against_integer_oracle():
    data = gen_circuit("alu")
    for v, case in enumerate(data.cases):
        control, a, b = v >> 10, (v >> 5) & 31, v & 31
        expected = {
            0: (a + b) % 32,
            1: (a - b) % 32,
            2: a & b,
            3: a | b,
        }[control]
        got = sum(bit << (4 - i) for i, bit in enumerate(case.outputs))
        assert got == expected


def test_mux_selects_data_bit():
    data = gen_circuit("mux11")
    for case in data.cases[::37]:
        select = (case.inputs[0] << 2) | (case.inputs[1] << 1) | case.inputs[2]
        assert case.outputs[0] == case.inputs[3 + select]


def test_unknown_circuit():
    with pytest.raises(UnknownCircuit):
        gen_circuit("adder9")


# ---------------------------------------------------------------------------
# splitting


def test_split_keijzer4_sizes():
    data = gen_synthetic_sr("keijzer-4", 0)
    train, test = split_train_test(data, 0.7, 0)
    assert (len(train), len(test)) == (282, 120)


def test_split_sixty_cases():
    cases = tuple(TestCase((float(i),), (0.0,)) for i in range(60))
    data = Dataset("pollution-sized", "real_sr", cases, 1, 1)
    train, test = split_train_test(data, 0.7, 1)
    assert (len(train), len(test)) == (42, 18)


def test_split_two_cases_half():
    cases = tuple(TestCase((float(i),), (0.0,)) for i in range(2))
    data = Dataset("two", "real_sr", cases, 1, 1)
    train, test = split_train_test(data, 0.5, 0)
    assert (len(train), len(test)) == (1, 1)


def test_split_table_train_sizes_for_all_synthetics():
    # training-side sizes published for the 70/30 protocol
    expected = {
        "keijzer-4": 282,
        "keijzer-9": 772,
        "keijzer-10": 7211,
        "keijzer-14": 2619,
        "nguyen-9": 714,
        "nguyen-10": 714,
        "keijzer-5": 7700,
        "vladislavleva-5": 2100,
        "korns-11": 14000,
        "korns-12": 14000,
    }
    for benchmark_id, train_size in expected.items():
        n = TABLE_SYNTHETIC[benchmark_id][1]
        assert math.ceil(round(0.7 * n, 9)) == train_size


def test_split_too_small():
    cases = tuple(TestCase((float(i),), (0.0,)) for i in range(3))
    data = Dataset("three", "real_sr", cases, 1, 1)
    with pytest.raises(SplitTooSmall):
        split_train_test(data, 0.9, 0)


@given(st.integers(2, 200), st.floats(0.05, 0.95), st.integers(0, 10_000))
def test_split_is_a_partition(n, fraction, seed):
    cases = tuple(TestCase((float(i),), (float(i % 3),)) for i in range(n))
    data = Dataset("p", "real_sr", cases, 1, 1)
    try:
        train, test = split_train_test(data, fraction, seed)
    except SplitTooSmall:
        return
    assert len(train) + len(test) == n
    ids_train = {c.inputs for c in train.cases}
    ids_test = {c.inputs for c in test.cases}
    assert ids_train | ids_test == {c.inputs for c in cases}
    assert not ids_train & ids_test


def test_split_deterministic():
    data = gen_synthetic_sr("nguyen-10", 3)
    a = split_train_test(data, 0.7, 9)[0]
    b = split_train_test(data, 0.7, 9)[0]
    assert a.cases == b.cases


# ---------------------------------------------------------------------------
# CSV


def test_load_csv_basic(tmp_path):
    p = tmp_path / "d.csv"
    p.write_text("1,2,10\n3,4,20\n5,6,30\n")
    data = load_csv(p)
    assert len(data) == 3
    assert data.feature_count == 2
    assert data.cases[0] == TestCase((1.0, 2.0), (10.0,))


def test_load_csv_named_target(tmp_path):
    p = tmp_path / "d.csv"
    p.write_text("a,b,target\n1,2,10\n3,4,20\n")
    data = load_csv(p, "b", header=True)
    assert data.cases[0] == TestCase((1.0, 10.0), (2.0,))


def test_load_csv_non_numeric_cell(tmp_path):
    p = tmp_path / "d.csv"
    p.write_text("1,2\n3,abc\n")
    with pytest.raises(NonNumericCell, match="row 1, column 1"):
        load_csv(p)


def test_load_csv_ragged_rows(tmp_path):
    p = tmp_path / "d.csv"
    p.write_text("1,2,3\n4,5\n")
    with pytest.raises(CsvParseError):
        load_csv(p)


def test_csv_roundtrip(tmp_path):
    data = gen_synthetic_sr("keijzer-4", 2)
    p = tmp_path / "k4.csv"
    save_csv(data, p)
    back = load_csv(p, -1, header=True, name=data.name)
    assert back.cases == data.cases


def test_circuit_csv_roundtrip(tmp_path):
    data = gen_circuit("parity5")
    p = tmp_path / "parity.csv"
    save_csv(data, p)
    back = load_circuit_csv(p, output_count=1, header=True, name="parity5")
    assert back.cases == data.cases
    assert back.domain == "circuit"


def test_circuit_csv_rejects_non_bits(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("0,1,0\n0,2,1\n")
    with pytest.raises(NonNumericCell):
        load_circuit_csv(p, output_count=1)


def test_housing_shaped_csv(tmp_path):
    # 506 rows, 13 features + target, the shape of the classic housing table
    rng = np.random.default_rng(0)
    rows = rng.normal(size=(506, 14))
    p = tmp_path / "housing.csv"
    p.write_text("\n".join(",".join(repr(float(v)) for v in row) for row in rows) + "\n")
    data = load_csv(p)
    assert data.feature_count == 13
    assert len(data) == 506


def test_dataset_validation():
    with pytest.raises(ValueError):
        Dataset("bad", "real_sr", (), 1, 1)
    with pytest.raises(ValueError):
        Dataset("bad", "nope", (TestCase((1.0,), (1.0,)),), 1, 1)
    with pytest.raises(ValueError):
        Dataset("bad", "circuit", (TestCase((2,), (0,)),), 1, 1)
