#!/usr/bin/env python3
"""
Test the tagmark stdio tagger server.
Trains a unigram model on the toy treebank (unless --model is given), starts
`python -m tagmark serve` and checks the wire-protocol replies.
"""

import argparse
import os
import subprocess
import sys
import tempfile
from pathlib import Path

REPO = Path(__file__).resolve().parent.parent
SRC = REPO / "tagmark-harness" / "src"
TOY_TREEBANK = REPO / "tagmark-harness" / "tests" / "fixtures" / "UD_Toy-Test"

sys.path.insert(0, str(SRC))

from tagmark.taggers.external import END_OF_STREAM, decode_reply, encode_request  # noqa: E402


def toy_model(directory: Path) -> Path:
    from tagmark.corpus import load_treebank
    from tagmark.taggers import train_builtin

    treebank = load_treebank(TOY_TREEBANK, "xx")
    return train_builtin("unigram", treebank.train, language="xx").serialize(directory)[0]


def test_serve(model: Path) -> bool:
    """Send two sentences around an empty one; expect one tag per token and the terminator."""

    print("\n" + "=" * 60)
    print("Testing tagmark serve")
    print("=" * 60)

    cmd = [sys.executable, "-m", "tagmark", "serve", "--model", str(model)]
    env = {**os.environ, "PYTHONPATH": str(SRC)}
    sentences = [["The", "dog", "runs", "."], [], ["A", "cat", "sleeps", "."]]
    request = encode_request(sentences)

    print("\n1. Starting server...")
    print(f"   Command: {' '.join(cmd)}")
    try:
        result = subprocess.run(cmd, input=request, capture_output=True, text=True, env=env, timeout=60)
    except (OSError, subprocess.TimeoutExpired) as e:
        print(f"❌ Error: {e}")
        return False

    if result.returncode != 0:
        print(f"❌ Server exited with status {result.returncode}")
        print(result.stderr)
        return False

    print("\n2. Checking replies...")
    lines = result.stdout.split("\n")
    if END_OF_STREAM not in lines:
        print(f"❌ No {END_OF_STREAM} terminator in the reply")
        return False
    replies = decode_reply(lines)

    ok = len(replies) == len(sentences)
    for forms, tags in zip(sentences, replies):
        status = "✅" if len(forms) == len(tags) else "❌"
        ok &= len(forms) == len(tags)
        print(f"   {status} {' '.join(f'{f}/{t}' for f, t in zip(forms, tags)) or '(empty sentence)'}")

    print("\n✅ Server replies are well framed" if ok else "\n❌ Reply framing is wrong")
    return ok


if __name__ == "__main__":
    parser = argparse.ArgumentParser(description="Smoke test of the tagmark stdio tagger server")
    parser.add_argument("--model", type=Path, help="model artifact (default: unigram trained on the toy treebank)")
    args = parser.parse_args()

    with tempfile.TemporaryDirectory() as tmp:
        model = args.model or toy_model(Path(tmp))
        success = test_serve(model)
    sys.exit(0 if success else 1)
