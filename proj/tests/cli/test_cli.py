#!/usr/bin/env python3
"""End-to-end checks of the perp command line tool.

Driven by two environment variables:
  PERP_BIN     path to the perp binary (required)
  PERP_SCHEMA  path to the manifest JSON schema (required)

Covers the contracts a downstream user relies on: exit codes, the CSV and
binary output formats, manifest schema validity, seed resolution order,
config file handling, the counterexample gate, and byte-identical output
across thread counts.
"""

import json
import os
import subprocess
import sys
import tempfile

import jsonschema

BIN = os.environ.get("PERP_BIN")
SCHEMA_PATH = os.environ.get("PERP_SCHEMA")

CHECKS = []


def check(fn):
    CHECKS.append(fn)
    return fn


def run(args, env_extra=None, cwd=None):
    env = dict(os.environ)
    env.pop("PERP_SEED", None)
    if env_extra:
        env.update(env_extra)
    return subprocess.run(
        [BIN] + args, capture_output=True, text=True, env=env, cwd=cwd
    )


def read_bytes(path):
    with open(path, "rb") as fh:
        return fh.read()


def load_json(path):
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


with open(SCHEMA_PATH, "r", encoding="utf-8") as fh:
    SCHEMA = json.load(fh)

BETA21 = "family=beta alpha=2 beta=1"


def simulate_args(out, manifest, extra=None):
    args = [
        "simulate",
        "--dist",
        BETA21,
        "--n",
        "2000",
        "--replicas",
        "3",
        "--seed",
        "42",
        "--out",
        out,
        "--manifest",
        manifest,
    ]
    return args + (extra or [])


@check
def csv_output_and_manifest_schema(tmp):
    out = os.path.join(tmp, "sim.csv")
    man = os.path.join(tmp, "sim.json")
    r = run(simulate_args(out, man))
    assert r.returncode == 0, r.stderr
    lines = read_bytes(out).decode().splitlines()
    assert lines[0] == "value,replica,block", lines[0]
    assert len(lines) == 1 + 2000 * 3, len(lines)
    replicas = {int(line.split(",")[1]) for line in lines[1:]}
    assert replicas == {0, 1, 2}, replicas

    manifest = load_json(man)
    jsonschema.validate(manifest, SCHEMA)
    assert manifest["seed"] == 42
    assert manifest["command"] == "simulate"
    assert manifest["replicas"] == 3
    assert "threads" not in manifest["options"]
    assert manifest["outputs"][0]["path"] == out
    assert manifest["outputs"][0]["bytes"] == os.path.getsize(out)


@check
def thread_count_never_changes_bytes(tmp):
    for sub, extra in [
        ("simulate", ["--n", "2000", "--replicas", "4"]),
        (
            "maxima-gof",
            ["--block-len", "100,25", "--n-blocks", "40", "--replicas", "3"],
        ),
        (
            "extremal-index",
            ["--n", "20000", "--replicas", "2", "--conditional-samples", "10"],
        ),
        ("tailcheck", ["--n", "30000", "--replicas", "4"]),
        ("norming", ["--log-n", "5.3", "--empirical-size", "40000"]),
    ]:
        out = os.path.join(tmp, f"{sub}.out")
        man = os.path.join(tmp, f"{sub}.man")
        base = [sub, "--dist", BETA21, "--seed", "7", "--out", out,
                "--manifest", man] + extra
        r = run(base + ["--threads", "1"])
        assert r.returncode == 0, (sub, r.stderr)
        first_out, first_man = read_bytes(out), read_bytes(man)
        r = run(base + ["--threads", "5"])
        assert r.returncode == 0, (sub, r.stderr)
        assert read_bytes(out) == first_out, f"{sub}: output depends on threads"
        assert read_bytes(man) == first_man, f"{sub}: manifest depends on threads"
        jsonschema.validate(json.loads(first_man.decode()), SCHEMA)


@check
def binary_format_magic_and_size(tmp):
    out = os.path.join(tmp, "sim.bin")
    man = os.path.join(tmp, "sim.json")
    r = run(simulate_args(out, man, ["--format", "binary"]))
    assert r.returncode == 0, r.stderr
    blob = read_bytes(out)
    assert blob[:8] == b"PERPBIN1", blob[:8]
    assert len(blob) == 16 + 16 * 2000 * 3, len(blob)
    manifest = load_json(man)
    jsonschema.validate(manifest, SCHEMA)
    assert manifest["outputs"][0]["bytes"] == len(blob)


@check
def seed_resolution_order(tmp):
    out = os.path.join(tmp, "o.csv")
    man = os.path.join(tmp, "m.json")
    cfgfile = os.path.join(tmp, "seed.cfg")
    with open(cfgfile, "w", encoding="utf-8") as fh:
        fh.write("seed = 1111\n")

    # Config alone.
    r = run(["simulate", "--dist", BETA21, "--n", "10", "--config", cfgfile,
             "--out", out, "--manifest", man])
    assert r.returncode == 0, r.stderr
    assert load_json(man)["seed"] == 1111

    # Environment beats config.
    r = run(["simulate", "--dist", BETA21, "--n", "10", "--config", cfgfile,
             "--out", out, "--manifest", man], env_extra={"PERP_SEED": "2222"})
    assert r.returncode == 0, r.stderr
    assert load_json(man)["seed"] == 2222

    # Flag beats environment.
    r = run(["simulate", "--dist", BETA21, "--n", "10", "--config", cfgfile,
             "--seed", "3333", "--out", out, "--manifest", man],
            env_extra={"PERP_SEED": "2222"})
    assert r.returncode == 0, r.stderr
    assert load_json(man)["seed"] == 3333

    # A malformed PERP_SEED is a config error.
    r = run(["simulate", "--dist", BETA21, "--n", "10",
             "--out", out, "--manifest", man],
            env_extra={"PERP_SEED": "not-a-seed"})
    assert r.returncode == 2, (r.returncode, r.stderr)


@check
def config_file_sections_and_flag_precedence(tmp):
    out = os.path.join(tmp, "o.csv")
    man = os.path.join(tmp, "m.json")
    cfgfile = os.path.join(tmp, "run.cfg")
    with open(cfgfile, "w", encoding="utf-8") as fh:
        fh.write(
            "dist = family=beta alpha=2 beta=1  # shared\n"
            "q = 1.0\n"
            "[simulate]\n"
            "n = 123\n"
            "replicas = 2\n"
        )
    r = run(["simulate", "--config", cfgfile, "--seed", "5",
             "--out", out, "--manifest", man])
    assert r.returncode == 0, r.stderr
    manifest = load_json(man)
    assert manifest["dist"] == BETA21
    assert manifest["options"]["n"] == 123
    assert manifest["replicas"] == 2
    rows = read_bytes(out).decode().splitlines()
    assert len(rows) == 1 + 123 * 2

    # The flag wins over the config value.
    r = run(["simulate", "--config", cfgfile, "--seed", "5", "--n", "7",
             "--out", out, "--manifest", man])
    assert r.returncode == 0, r.stderr
    assert load_json(man)["options"]["n"] == 7


@check
def config_errors_exit_2(tmp):
    out = os.path.join(tmp, "o.csv")
    man = os.path.join(tmp, "m.json")

    r = run(["simulate", "--dist", "family=gauss", "--out", out,
             "--manifest", man])
    assert r.returncode == 2, (r.returncode, r.stderr)
    assert "unknown family" in r.stderr

    r = run(["simulate", "--dist", BETA21, "--q", "-1", "--out", out,
             "--manifest", man])
    assert r.returncode == 2, (r.returncode, r.stderr)

    bad = os.path.join(tmp, "bad.cfg")
    with open(bad, "w", encoding="utf-8") as fh:
        fh.write("this line has no equals sign\n")
    r = run(["simulate", "--dist", BETA21, "--config", bad, "--out", out,
             "--manifest", man])
    assert r.returncode == 2, (r.returncode, r.stderr)
    assert "line 1" in r.stderr

    r = run(["simulate", "--dist", BETA21, "--config",
             os.path.join(tmp, "missing.cfg"), "--out", out,
             "--manifest", man])
    assert r.returncode == 2, (r.returncode, r.stderr)


@check
def counterexample_gate(tmp):
    out = os.path.join(tmp, "o.csv")
    man = os.path.join(tmp, "m.json")
    args = ["simulate", "--dist", "family=twopoint p=0.5", "--n", "100",
            "--out", out, "--manifest", man]
    r = run(args)
    assert r.returncode == 2, (r.returncode, r.stderr)
    assert "nongeometric-tail assumption" in r.stderr
    assert "--allow-counterexample" in r.stderr

    r = run(args + ["--allow-counterexample"])
    assert r.returncode == 0, r.stderr
    manifest = load_json(man)
    jsonschema.validate(manifest, SCHEMA)
    assert manifest["options"]["allow_counterexample"] is True


@check
def runtime_errors_exit_3(tmp):
    man = os.path.join(tmp, "m.json")
    r = run(["simulate", "--dist", BETA21, "--n", "10",
             "--out", os.path.join(tmp, "no-such-dir", "o.csv"),
             "--manifest", man])
    assert r.returncode == 3, (r.returncode, r.stderr)
    assert r.stderr.startswith("error:"), r.stderr


@check
def maxima_gof_report_shape(tmp):
    out = os.path.join(tmp, "gof.json")
    man = os.path.join(tmp, "gof-man.json")
    r = run(["maxima-gof", "--dist", BETA21, "--seed", "11",
             "--block-len", "200,50", "--n-blocks", "40", "--replicas", "2",
             "--theta-method", "runs", "--out", out, "--manifest", man])
    assert r.returncode == 0, r.stderr
    report = load_json(out)
    assert report["command"] == "maxima-gof"
    assert [e["block_len"] for e in report["results"]] == [200, 50]
    for entry in report["results"]:
        assert entry["theta_estimate"]["method"] == "runs"
        assert 0.0 < entry["theta_used"] <= 1.0
        assert 0.0 <= entry["ks"] <= 1.0
        assert entry["norming"]["method"] == "empirical"
    jsonschema.validate(load_json(man), SCHEMA)


@check
def norming_report_shape(tmp):
    out = os.path.join(tmp, "norming.json")
    man = os.path.join(tmp, "norming-man.json")
    r = run(["norming", "--dist", BETA21, "--log-n", "5.3",
             "--empirical-size", "40000", "--seed", "3",
             "--out", out, "--manifest", man])
    assert r.returncode == 0, r.stderr
    report = load_json(out)
    v = report["variants"]
    for name in ("solved-lower", "solved-upper", "asymptotic", "empirical"):
        assert v[name] is not None, (name, v.get(name + "_reason"))
        assert v[name]["a"] > 0
    assert v["solved-lower"]["residual"] <= 1e-9 * 5.3
    jsonschema.validate(load_json(man), SCHEMA)

    # Without --empirical-size the empirical variant is skipped with a reason.
    r = run(["norming", "--dist", BETA21, "--log-n", "5.3", "--seed", "3",
             "--out", out, "--manifest", man])
    assert r.returncode == 0, r.stderr
    v = load_json(out)["variants"]
    assert v["empirical"] is None
    assert "empirical-size" in v["empirical_reason"]


@check
def extremal_index_report_shape(tmp):
    out = os.path.join(tmp, "ei.json")
    man = os.path.join(tmp, "ei-man.json")
    r = run(["extremal-index", "--dist", BETA21, "--n", "30000",
             "--replicas", "2", "--seed", "13", "--u-level", "0.99",
             "--conditional-samples", "20", "--out", out, "--manifest", man])
    assert r.returncode == 0, r.stderr
    report = load_json(out)
    assert report["theoretical"]["theta_hat"] == 1.0
    for name in ("blocks", "runs", "conditional"):
        assert report[name] is not None, (name, report.get(name + "_reason"))
        assert 0.0 < report[name]["theta_hat"] <= 1.0
    assert report["u"] > 0
    assert report["u_level"] == 0.99
    jsonschema.validate(load_json(man), SCHEMA)


@check
def tailcheck_report_shape(tmp):
    out = os.path.join(tmp, "tail.json")
    man = os.path.join(tmp, "tail-man.json")
    r = run(["tailcheck", "--dist", "family=beta alpha=1 beta=1",
             "--n", "200000", "--replicas", "4", "--seed", "21",
             "--out", out, "--manifest", man])
    assert r.returncode == 0, r.stderr
    sandwich = load_json(out)["sandwich"]
    assert sandwich["feasible"] is True
    assert len(sandwich["lower_feasible"]) > 0
    assert len(sandwich["upper_feasible"]) > 0
    assert len(sandwich["y_grid"]) == len(sandwich["neg_log_tail"])
    jsonschema.validate(load_json(man), SCHEMA)


def main():
    if not BIN or not os.path.exists(BIN):
        print("PERP_BIN is not set or does not exist", file=sys.stderr)
        return 1
    if not SCHEMA_PATH or not os.path.exists(SCHEMA_PATH):
        print("PERP_SCHEMA is not set or does not exist", file=sys.stderr)
        return 1
    failures = 0
    for fn in CHECKS:
        with tempfile.TemporaryDirectory(prefix="perp-cli-") as tmp:
            try:
                fn(tmp)
                print(f"ok   {fn.__name__}")
            except AssertionError as exc:
                failures += 1
                print(f"FAIL {fn.__name__}: {exc}")
            except Exception as exc:  # noqa: BLE001
                failures += 1
                print(f"FAIL {fn.__name__}: unexpected {exc!r}")
    print(f"{len(CHECKS) - failures}/{len(CHECKS)} checks passed")
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
