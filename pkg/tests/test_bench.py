from flowforge.bench import bench_scale, make_reference_flow
from flowforge.flow import validate
from flowforge.synth import generate_dataset, majority_baseline


def test_synthetic_dataset_is_seed_deterministic():
    a = generate_dataset(seed=5, rows=50)
    b = generate_dataset(seed=5, rows=50)
    c = generate_dataset(seed=6, rows=50)
    assert a == b
    assert a != c
    assert a.schema.names == ("text", "category", "num1", "num2", "label")
    labels = set(a.column("label"))
    assert labels <= {"alpha", "beta", "gamma"}
    assert 0 < majority_baseline(a.column("label")) < 1


def test_reference_flow_is_valid(tmp_path):
    csv = tmp_path / "d.csv"
    from flowforge.components.io import write_frame

    write_frame(generate_dataset(seed=1, rows=10), str(csv))
    flow = make_reference_flow(str(csv))
    assert validate(flow) == []


def test_bench_scale_small_run():
    report = bench_scale(workers=2, seed=3, rows=50)
    assert len(report.fractions) == 10
    assert report.fractions == [round(0.1 * k, 1) for k in range(1, 11)]
    assert all(t > 0 for t in report.sequential_ms)
    assert all(t > 0 for t in report.optimized_ms)
    # row counts are a pure function of the seed and fractions
    again = bench_scale(workers=2, seed=3, rows=50)
    assert again.rows == report.rows
    csv_text = report.to_csv()
    assert csv_text.splitlines()[0] == "fraction,rows,sequential_ms,optimized_ms"
    assert len(csv_text.splitlines()) == 11
