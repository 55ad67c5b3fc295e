"""usage: tree_digest.py DIR  -> sha256 over sorted (relpath \\0 size \\0 content) records"""
import hashlib
import os
import sys


def digest(root):
    files = []
    for base, _, names in os.walk(root):
        for n in names:
            full = os.path.join(base, n)
            files.append((os.path.relpath(full, root).replace(os.sep, "/"), full))
    h = hashlib.sha256()
    for rel, full in sorted(files):
        data = open(full, "rb").read()
        h.update(rel.encode() + b"\0" + str(len(data)).encode() + b"\0" + data)
    return "sha256:" + h.hexdigest()


if __name__ == "__main__":
    print(digest(sys.argv[1]))
