#!/usr/bin/env python3
"""CLI and HTTP contract checks: exit codes, output schemas, determinism."""

import argparse
import filecmp
import json
import socket
import subprocess
import sys
import tempfile
import time
import urllib.error
import urllib.request
from pathlib import Path

import jsonschema
from referencing import Registry, Resource

failures = []


def check(cond, what):
    print(("ok    " if cond else "FAIL  ") + what)
    if not cond:
        failures.append(what)


def load_schemas(root):
    schemas = {}
    for p in Path(root).glob("*.json"):
        schemas[p.name] = json.loads(p.read_text())
    registry = Registry().with_resources(
        [(name, Resource.from_contents(s)) for name, s in schemas.items()])
    return schemas, registry


def validate(doc, name, what):
    try:
        jsonschema.Draft202012Validator(SCHEMAS[name], registry=REGISTRY).validate(doc)
        check(True, f"{what} matches {name}")
    except jsonschema.ValidationError as e:
        check(False, f"{what} matches {name}: {e.message} at {list(e.absolute_path)}")


def run(*args, cwd):
    return subprocess.run([CLI, *map(str, args)], cwd=cwd, capture_output=True, text=True, timeout=600)


def rel(a, b):
    return abs(a - b) / abs(b)


def cli_checks(tmp):
    # synth: validation field plus sidecar config
    r = run("synth", "-o", "v/field.csv", cwd=tmp)
    check(r.returncode == 0, "synth exits 0")
    side = json.loads((tmp / "v/field.json").read_text())
    validate(side, "synth.json", "synth sidecar")
    header = (tmp / "v/field.csv").read_text().splitlines()[0]
    check(header == "X,Y,Z,Ux,Uy,Uz", "synth CSV has six columns")

    # analyze from the sidecar
    r = run("analyze", "-c", "v/field.json", "-o", "a1", "--no-timestamp", cwd=tmp)
    check(r.returncode == 0, "analyze exits 0")
    summary = json.loads((tmp / "a1/summary.json").read_text())
    validate(summary, "summary.json", "analyze summary")
    p = summary["result"]["plateau"]
    check(rel(p["K_I"]["mean"], 3e6) < 0.02 and rel(p["K_II"]["mean"], 1e6) < 0.02
          and rel(p["K_III"]["mean"], 5e6) < 0.02, "analyze recovers K = (3, 1, 5) MPa*sqrt(m) within 2 %")
    check({f.name for f in (tmp / "a1").iterdir()} == {"results.csv", "summary.json", "contours.svg"},
          "analyze writes results.csv, summary.json, contours.svg")

    # determinism and serial path
    run("analyze", "-c", "v/field.json", "-o", "a2", "--no-timestamp", cwd=tmp)
    run("analyze", "-c", "v/field.json", "-o", "a3", "--no-timestamp", "--serial", cwd=tmp)
    for f in ("results.csv", "summary.json", "contours.svg"):
        check(filecmp.cmp(tmp / "a1" / f, tmp / "a2" / f, shallow=False), f"repeat run reproduces {f}")
    check(filecmp.cmp(tmp / "a1/results.csv", tmp / "a3/results.csv", shallow=False),
          "serial run reproduces results.csv")

    # report regenerates the same files
    r = run("report", "a1/summary.json", "-o", "rep", "--no-timestamp", cwd=tmp)
    check(r.returncode == 0, "report exits 0")
    for f in ("results.csv", "summary.json", "contours.svg"):
        check(filecmp.cmp(tmp / "a1" / f, tmp / "rep" / f, shallow=False), f"report regenerates {f}")

    # flags override the config file
    run("analyze", "-c", "v/field.json", "-o", "a4", "--no-timestamp", "-n", "10", "--window", "4", "8", cwd=tmp)
    s4 = json.loads((tmp / "a4/summary.json").read_text())
    check(s4["result"]["contours"] == 10 and s4["options"]["contours"] == 10, "-n overrides the config")
    check(s4["result"]["plateau"]["start_contour"] == 4 and s4["result"]["plateau"]["end_contour"] == 8
          and s4["result"]["plateau"]["explicit_window"], "--window sets an explicit 1-based window")

    # studies
    r = run("qsweep", "-c", "v/field.json", "-o", "qs", "--no-timestamp", "--step-deg", "20", cwd=tmp)
    check(r.returncode == 0, "qsweep exits 0")
    qs = json.loads((tmp / "qs/study.json").read_text())
    validate(qs, "study.json", "qsweep study")
    check(len(qs["study"]["points"]) == 7, "qsweep default half range 60 deg at 20 deg steps gives 7 angles")
    r = run("noise-study", "--fractions", "1e-4", "1e-3", "1e-2", "--trials", "1", "-o", "ns",
            "--no-timestamp", cwd=tmp)
    check(r.returncode == 0, "noise-study exits 0")
    ns = json.loads((tmp / "ns/study.json").read_text())
    validate(ns, "study.json", "noise study")
    check(ns["study"]["truth"]["K_III"] == 5e6, "noise-study defaults to the validation crack")
    r = run("tip-study", "--dx", "-1", "0", "1", "--dy", "0", "-o", "ts", "--no-timestamp", cwd=tmp)
    check(r.returncode == 0, "tip-study exits 0")
    validate(json.loads((tmp / "ts/study.json").read_text()), "study.json", "tip study")

    # 4-column data with a stereo-only option
    run("synth", "-o", "m1/field.csv", "--K-I", "3", "--K-II", "0", "--K-III", "0", cwd=tmp)
    r = run("analyze", "-c", "m1/field.json", "-o", "m1o", "--no-timestamp", "--pseudo-mode", "plane_strain", cwd=tmp)
    check(r.returncode == 0, "4-column analyze exits 0")
    s = json.loads((tmp / "m1o/summary.json").read_text())
    check(not s["input"]["has_out_of_plane"], "K_III = 0 synth writes 4-column data")
    check(any("6-column" in w for w in s["result"]["warnings"]), "stereo-only option on 4-column data warns")
    check(s["result"]["series"].get("K_III") in (None, []), "4-column run omits K_III")

    # error contract
    (tmp / "steel.json").write_text(json.dumps(side["material"]))
    cases = [
        (["analyze", "-i", "missing.csv", "-m", "steel.json", "--tip", "0", "0", "--mouth", "-1", "0", "-u", "um"], 3,
         "IoError", "missing input"),
        (["analyze", "-i", "v/field.csv", "--tip", "0", "0", "--mouth", "-1", "0", "-u", "um"], 2, None,
         "missing material"),
        (["analyze", "-c", "v/field.json", "--tip", "5", "0", "-u", "um"], 1, "TipOutsideGrid", "tip outside grid"),
        (["analyze", "-c", "v/field.json", "--model", "ramberg-osgood"], 2, "ConfigError",
         "ramberg-osgood without parameters"),
        (["analyze", "--no-such-flag"], 2, None, "unknown flag"),
    ]
    for args, code, kind, what in cases:
        r = run(*args, "-o", "err", cwd=tmp)
        check(r.returncode == code, f"{what} exits {code} (got {r.returncode})")
        if kind:
            try:
                doc = json.loads(r.stderr.strip().splitlines()[-1])
                validate(doc, "error.json", f"{what} stderr")
                check(doc["error"]["kind"] == kind, f"{what} reports {kind}")
            except (ValueError, IndexError):
                check(False, f"{what} prints a JSON error on stderr")


def http(method, url, body=None, ctype="application/json"):
    data = body if body is None or isinstance(body, bytes) else json.dumps(body).encode()
    req = urllib.request.Request(url, data=data, method=method, headers={"Content-Type": ctype})
    try:
        with urllib.request.urlopen(req, timeout=60) as resp:
            return resp.status, json.loads(resp.read())
    except urllib.error.HTTPError as e:
        return e.code, json.loads(e.read())


def service_checks(tmp):
    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        port = s.getsockname()[1]
    proc = subprocess.Popen([CLI, "serve", "--port", str(port)], stderr=subprocess.DEVNULL)
    base = f"http://127.0.0.1:{port}/api"
    try:
        for _ in range(100):
            try:
                socket.create_connection(("127.0.0.1", port), timeout=0.2).close()
                break
            except OSError:
                time.sleep(0.1)
        csv = (tmp / "v/field.csv").read_bytes()
        side = json.loads((tmp / "v/field.json").read_text())
        code, field = http("POST", base + "/fields", csv, "text/csv")
        check(code == 201, "service upload returns 201")
        validate(field, "field.json", "service field")
        code, _ = http("PUT", f"{base}/fields/{field['id']}/crack", side["crack"])
        check(code == 200, "service crack returns 200")
        code, job = http("POST", f"{base}/fields/{field['id']}/jobs", {"material": side["material"]})
        check(code == 202, "service job returns 202")
        validate(job, "job.json", "queued job")
        for _ in range(600):
            code, job = http("GET", f"{base}/jobs/{job['id']}")
            if job["status"] in ("done", "failed"):
                break
            time.sleep(0.05)
        check(job["status"] == "done", "service job finishes")
        validate(job, "job.json", "finished job")
        cli = json.loads((tmp / "a1/summary.json").read_text())["result"]
        check(job["result"]["plateau"] == cli["plateau"], "service plateau equals the CLI plateau")
        code, err = http("GET", f"{base}/fields/nope")
        check(code == 404, "unknown field returns 404")
        validate(err, "error.json", "404 body")
    finally:
        proc.terminate()
        proc.wait(timeout=30)
    check(proc.returncode == 0, "serve exits 0 on SIGTERM")


def main():
    global CLI, SCHEMAS, REGISTRY
    ap = argparse.ArgumentParser()
    ap.add_argument("--cli", required=True)
    ap.add_argument("--schemas", required=True)
    args = ap.parse_args()
    CLI = str(Path(args.cli).resolve())
    SCHEMAS, REGISTRY = load_schemas(args.schemas)
    with tempfile.TemporaryDirectory() as d:
        tmp = Path(d)
        cli_checks(tmp)
        service_checks(tmp)
    print(f"{len(failures)} failure(s)")
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
