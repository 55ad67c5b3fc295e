#!/usr/bin/env python3
"""Validate shipped fixtures and fresh CLI output against schemas/."""
import glob
import json
import os
import subprocess
import sys
import tempfile

import jsonschema

root, cli = sys.argv[1], sys.argv[2]


def schema(name):
    with open(os.path.join(root, "schemas", name + ".schema.json")) as f:
        doc = json.load(f)
    jsonschema.Draft202012Validator.check_schema(doc)
    return jsonschema.Draft202012Validator(doc)


def check(name, path):
    with open(path) as f:
        doc = json.load(f)
    errors = list(schema(name).iter_errors(doc))
    for e in errors:
        print(f"{path}: {e.json_path}: {e.message[:200]}")
    return len(errors)


fx = os.path.join(root, "fixtures")
bad = 0
for p in glob.glob(os.path.join(fx, "manifest*.json")):
    bad += check("manifest", p)
for p in glob.glob(os.path.join(fx, "suites", "*.json")):
    bad += check("suite", p)
for p in glob.glob(os.path.join(fx, "episodes", "*.script.json")):
    bad += check("script", p)
bad += check("runs", os.path.join(fx, "expected", "stategym-seed7.runs.json"))
for p in glob.glob(os.path.join(root, "tests", "golden", "*.trajectory.json")):
    bad += check("trajectory", p)

with tempfile.TemporaryDirectory() as tmp:
    manifest = os.path.join(fx, "manifest.json")
    script = os.path.join(fx, "episodes", "gunzip-ledger.script.json")
    cassette = os.path.join(tmp, "rec.json")
    subprocess.run([cli, "agent", manifest, "parameterize-gunzip", "--lm", "scripted:" + script,
                    "--record", cassette, "--out", tmp], check=True, capture_output=True)
    bad += check("cassette", cassette)
    bad += check("trajectory", os.path.join(tmp, "parameterize-gunzip.trajectory.json"))
    out = os.path.join(tmp, "batch.json")
    subprocess.run([cli, "eval", manifest, tmp, "--out", out], capture_output=True)
    with open(out) as f:
        batch = json.load(f)
    for i, r in enumerate(batch["reports"]):
        p = os.path.join(tmp, f"report{i}.json")
        with open(p, "w") as f:
            json.dump(r, f)
        bad += check("report", p)
    runs = os.path.join(tmp, "runs.json")
    subprocess.run([cli, "stategym", "--seed", "1", "--initial", "2", "--per-state", "2", "--actions", "10",
                    "--grid", "0,5,10", "--lm", "oracle", "--runs-out", runs], check=True, capture_output=True)
    bad += check("runs", runs)

print("schema violations:", bad)
sys.exit(1 if bad else 0)
