"""Runs the agent command on a scripted episode and checks every state against
episode_oracle.py computed live.

Usage: check_trajectory.py BINARY MANIFEST TASK REPO_DIR SCRIPT [EXTERNAL]
"""
import json
import os
import subprocess
import sys
import tempfile

HERE = os.path.dirname(os.path.abspath(__file__))


def main():
    binary, manifest, task, repo, script = sys.argv[1:6]
    external = sys.argv[6] if len(sys.argv) > 6 else None
    wd = os.path.basename(os.path.normpath(repo))
    oracle_args = [sys.executable, os.path.join(HERE, "episode_oracle.py"), repo, wd, script]
    agent_args = [binary, "agent", manifest, task, "--lm", "scripted:" + script]
    if external:
        oracle_args.append(external)
        agent_args += ["--external-edits", external]
    want = json.loads(subprocess.run(oracle_args, check=True, capture_output=True, text=True).stdout)
    with tempfile.TemporaryDirectory() as out:
        run = subprocess.run(agent_args + ["--out", out], capture_output=True, text=True)
        expected_rc = 0 if want["status"] == "submitted" else 1
        if run.returncode != expected_rc:
            sys.exit(f"agent exited {run.returncode}, expected {expected_rc}: {run.stderr}")
        traj = json.load(open(os.path.join(out, task + ".trajectory.json")))
        patch = open(os.path.join(out, task + ".patch")).read()

    users = [h for h in traj["history"] if h["role"] == "user"]
    if len(users) != len(want["steps"]):
        sys.exit(f"{len(users)} steps, oracle has {len(want['steps'])}")
    for n, (u, w) in enumerate(zip(users, want["steps"]), start=1):
        state = json.loads(u["state"])
        got = {
            "recent_edits": state["recent_edits"],
            "external_edits": state.get("external_edits", []),
            "open_file": state["open_file"],
            "working_dir": state["working_dir"],
        }
        for key, value in got.items():
            if value != w[key]:
                sys.exit(f"step {n} {key}: {value!r} != {w[key]!r}")
        edit = u.get("edit")
        if (edit and [edit["file"], edit["line_start"], edit["line_end"]]) != (w["edit"] or None):
            sys.exit(f"step {n} edit: {edit!r} != {w['edit']!r}")
    if traj["status"] != want["status"]:
        sys.exit(f"status {traj['status']} != {want['status']}")
    for path in want["changed_files"]:
        if f"+++ b/{path}\n" not in patch:
            sys.exit(f"patch does not touch {path}")
    print(f"{len(users)} steps agree with the oracle")


if __name__ == "__main__":
    main()
