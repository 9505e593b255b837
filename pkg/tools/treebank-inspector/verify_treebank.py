#!/usr/bin/env python3
"""
Verify downloaded UD 2.6 treebanks against the expected dataset inventory.

Loads each treebank through tagmark's curation, then compares token and
sentence totals and the train/dev/test token shares with the reference
inventory.
"""

import argparse
import os
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent.parent.parent / "tagmark-harness" / "src"))

from tagmark.corpus import load_treebank  # noqa: E402
from tagmark.errors import TagmarkError  # noqa: E402

# language -> (UD directory, tokens, sentences, split percentages)
EXPECTED = {
    'ar': ('UD_Arabic-PADT', 242_000, 7_664, (80, 10, 10)),
    'zh': ('UD_Chinese-GSD', 123_000, 4_997, (80, 10, 10)),
    'da': ('UD_Danish-DDT', 101_000, 5_512, (80, 10, 10)),
    'en': ('UD_English-GUM', 113_000, 5_961, (72, 14, 14)),
    'hi': ('UD_Hindi-HDTB', 352_000, 16_647, (80, 10, 10)),
    'ru': ('UD_Russian-GSD', 98_000, 5_030, (76, 12, 12)),
    'es': ('UD_Spanish-AnCora', 548_000, 17_680, (80, 10, 10)),
    'tr': ('UD_Turkish-IMST', 56_400, 5_635, (66, 17, 17)),
}

TOKEN_TOLERANCE = 0.05
SHARE_TOLERANCE = 3.0


def verify_treebank(root: Path, code: str) -> bool:
    directory, tokens, sentences, splits = EXPECTED[code]
    path = root / directory
    if not path.is_dir():
        print(f"  ❌ {code}: {directory} not found under {root}")
        return False

    try:
        treebank = load_treebank(path, code)
    except TagmarkError as e:
        print(f"  ❌ {code}: {e}")
        return False

    stats = treebank.statistics()
    total_tokens = sum(s.tokens for s in stats.values())
    total_sentences = sum(s.sentences for s in stats.values())
    shares = tuple(round(s.token_share * 100, 1) for s in stats.values())

    ok = True
    token_status = "✅" if abs(total_tokens - tokens) <= tokens * TOKEN_TOLERANCE else "⚠️"
    ok &= token_status == "✅"
    sentence_status = "✅" if total_sentences == sentences else "⚠️"
    ok &= sentence_status == "✅"
    share_status = "✅" if all(abs(a - b) <= SHARE_TOLERANCE for a, b in zip(shares, splits)) else "⚠️"
    ok &= share_status == "✅"

    print(f"\n📂 {code} ({treebank.name})")
    print(f"  {token_status} tokens: {total_tokens:,} (expected ~{tokens:,})")
    print(f"  {sentence_status} sentences: {total_sentences:,} (expected {sentences:,})")
    print(f"  {share_status} splits: {'/'.join(f'{s:g}' for s in shares)} (expected {'/'.join(map(str, splits))})")
    print(f"  🏷️  tags: {len(treebank.tagset())}")
    return ok


def main():
    parser = argparse.ArgumentParser(description=__doc__.strip().splitlines()[0])
    parser.add_argument('--ud-root', type=Path, default=os.environ.get('TAGMARK_UD_ROOT'),
                        help='directory holding the UD_* treebank folders (default: $TAGMARK_UD_ROOT)')
    parser.add_argument('--language', action='append', choices=sorted(EXPECTED), help='check only these')
    args = parser.parse_args()
    if not args.ud_root:
        parser.error('--ud-root or TAGMARK_UD_ROOT is required')

    print("📊 UD Treebank Verification Report")
    print("=" * 60)

    codes = args.language or sorted(EXPECTED)
    passed = sum(verify_treebank(Path(args.ud_root), code) for code in codes)

    print(f"\n🎯 {passed}/{len(codes)} treebanks match the expected inventory")
    return 0 if passed == len(codes) else 1


if __name__ == "__main__":
    sys.exit(main())
