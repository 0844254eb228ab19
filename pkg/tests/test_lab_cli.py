import json

import pytest

from conftest import CONFIGS, SHIPPED
from harmlab.errors import ConfigError
from harmlab.lab_cli import EXIT_OK, EXIT_STAGE, EXIT_VALIDATION, main, report, validate


def _cfg(tmp_path, **over):
    raw = json.loads((CONFIGS / "halfplane.json").read_text())
    raw["output"] = {"dir": str(tmp_path / "out")}
    raw.update(over)
    return raw


def test_shipped_configs_validate(capsys):
    for name in SHIPPED:
        assert main(["validate", str(CONFIGS / f"{name}.json")]) == EXIT_OK


def test_increasing_scales_name_the_field(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(_cfg(tmp_path, scales=[0.1, 0.2, 0.4, 0.8])))
    assert main(["validate", str(path)]) == EXIT_VALIDATION
    err = json.loads(capsys.readouterr().err)
    assert "scales" in err["fields"]


def test_validation_collects_all_fields(tmp_path):
    raw = _cfg(tmp_path, seed=None, source="magic", poles={"plus": [0.0, -1.0]})
    del raw["seed"]
    with pytest.raises(ConfigError) as exc:
        validate(raw)
    assert {"seed", "source", "poles.plus"} <= set(exc.value.fields)


def test_seed_and_out_overrides(tmp_path):
    cfg = validate(_cfg(tmp_path), out_override=tmp_path / "x", seed_override=5)
    assert cfg.seed == 5 and cfg.out_dir == tmp_path / "x"


def test_stage_failure_exit_code(tmp_path):
    raw = _cfg(tmp_path, poles={"plus": None}, analyses={"flatness": True})
    path = tmp_path / "c.json"
    path.write_text(json.dumps(raw))
    assert main(["run", str(path)]) == EXIT_STAGE
    man = json.loads((tmp_path / "out" / "manifest.json").read_text())
    assert man["status"] == "failed" and man["failed_stage"] == "estimate"


def test_shipped_runs_match_golden_digests(shipped_runs):
    for name, runs in shipped_runs.items():
        golden = json.loads((CONFIGS / "golden" / f"{name}.json").read_text())["files"]
        for rc, man, _ in runs:
            assert rc == 0 and man["status"] == "ok"
            assert {k: man["files"][k] for k in golden} == golden
            assert all(not v for v in man["warnings"].values())


def test_disc_demo_outputs(shipped_runs):
    _, man, out = shipped_runs["disc"][0]
    rows = (out / "estimate.csv").read_text().splitlines()
    assert len(rows) == 17 and rows[0].startswith("kind,")
    cls = json.loads((out / "classification.json").read_text())["points"][0]["classification"]
    assert cls["flatness_verdict"] == "flat" and cls["flatness"][-1] < 0.05


def test_report_tables(shipped_runs, tmp_path, capsys):
    hp = [str(shipped_runs["halfplane"][0][2] / "manifest.json")]
    rows, counts, missing = report(hp, tmp_path / "r.csv")
    n = len(rows)
    assert counts["lambda"] == {"Lambda1": n} and counts["gb"] == {"gamma_g": n}
    assert counts["flatness"] == {"flat": n} and not missing
    assert (tmp_path / "r.csv").read_text().startswith("manifest,point")

    wedge = str(shipped_runs["wedge"][0][2] / "manifest.json")
    rows, _, _ = report([wedge])
    assert [r[3] for r in rows] == ["Lambda2", "Lambda1", "Lambda1"]


def test_report_empty_and_missing(tmp_path, capsys):
    assert main(["report"]) == EXIT_OK
    assert "no classified points" in capsys.readouterr().err
    rows, _, missing = report([tmp_path / "nope" / "manifest.json"])
    assert rows == [] and len(missing) == 1
