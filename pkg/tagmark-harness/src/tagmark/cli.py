"""
Command line: python -m tagmark <command> [options]

    train      train and serialize the selected cells
    evaluate   measure already trained cells
    run        train, evaluate, then write the report
    measure    print size metrics of a serialized model (nothing persisted)
    skyline    print per-language skyline members, write skyline counts
    report     rebuild the report from records.jsonl
    serve      stdio tagger server for one model file

Exit status: 0 when every cell succeeded, 2 when some cells failed, 1 on a
fatal error (bad config, unreadable data).
"""

import argparse
import asyncio
import os
import sys
from pathlib import Path
from typing import List, Optional

from dotenv import load_dotenv
from loguru import logger

from . import __version__
from .errors import ConfigError, TagmarkError

# heavier modules are imported by the commands that need them; "serve" is
# the measured inference process and must stay lean

LOG_FORMAT = '{time} - {name} - {level} - {message}'


def configure_logging(level: Optional[str] = None):
    logger.remove()
    logger.add(sys.stderr, level=(level or os.environ.get('TAGMARK_LOG_LEVEL', 'INFO')).upper(), format=LOG_FORMAT)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='tagmark', description='Benchmark part-of-speech taggers on accuracy and size')
    parser.add_argument('--version', action='version', version=f"tagmark {__version__}")
    parser.add_argument('--log-level', help='DEBUG, INFO, WARNING, ... (default: $TAGMARK_LOG_LEVEL or INFO)')
    commands = parser.add_subparsers(dest='command', required=True)

    for name, summary in (
        ('train', 'train and serialize the selected cells'),
        ('evaluate', 'evaluate trained cells on the test split'),
        ('run', 'train, evaluate and report'),
    ):
        sub = commands.add_parser(name, help=summary)
        sub.add_argument('--config', required=True, type=Path, help='experiment config (YAML)')
        sub.add_argument('--tagger', action='append', help='restrict to this tagger id (repeatable)')
        sub.add_argument('--language', action='append', help='restrict to this language code (repeatable)')
        sub.add_argument('--out', type=Path, help='output directory (overrides the config)')
        sub.add_argument('--no-resume', action='store_true', help='ignore the manifest and redo every cell')

    measure = commands.add_parser('measure', help='size metrics of one serialized model')
    measure.add_argument('--model', required=True, type=Path, action='append', help='artifact file (repeatable)')
    measure.add_argument('--memory', type=Path, metavar='CONLLU', help='also measure inference memory on this file')
    measure.add_argument('--poll-hz', type=float, default=2.0)
    measure.add_argument('--preset', type=int, default=6, help='xz preset (default: 6)')

    skyline = commands.add_parser('skyline', help='per-language skyline members and counts')
    skyline.add_argument('--config', type=Path, help='config whose output directory holds records.jsonl')
    skyline.add_argument('--records', type=Path, help='records file (default: <out>/records.jsonl)')
    skyline.add_argument('--out', type=Path, help='output directory')
    skyline.add_argument('--size-metric', default='memory', help='memory, model_size or compressed_size')
    skyline.add_argument('--accuracy-metric', default='token', help='token or sentence')

    report = commands.add_parser('report', help='rebuild the report from persisted records')
    report.add_argument('--config', type=Path, help='config whose output directory holds records.jsonl')
    report.add_argument('--records', type=Path, help='records file (default: <out>/records.jsonl)')
    report.add_argument('--out', type=Path, help='output directory')
    report.add_argument('--all-pairs', action='store_true', help='plot every size x accuracy metric pair')

    server = commands.add_parser('serve', help='stdio tagger server (wire protocol on stdin/stdout)')
    server.add_argument('--model', required=True, type=Path, help='model artifact file')
    return parser


def _records_location(args) -> Path:
    from .config import load_config, output_dir

    if args.records:
        return args.records
    if args.config:
        return output_dir(load_config(args.config), args.out) / 'records.jsonl'
    return Path(args.out or os.environ.get('TAGMARK_OUTPUT_DIR', 'runs')) / 'records.jsonl'


def cmd_experiment(args) -> int:
    from .config import load_config, output_dir
    from .harness import run_experiment

    config = load_config(args.config)
    out = output_dir(config, args.out)
    summary = run_experiment(
        config, out, stage=args.command, taggers=args.tagger, languages=args.language, resume=not args.no_resume
    )
    for entry in summary.failed:
        logger.error(f"{entry.tagger}/{entry.language} failed during {entry.stage}: {entry.cause}")
    return summary.exit_code


def cmd_measure(args) -> int:
    from .corpus import read_conllu
    from .metrics import compressed_size, measure_memory, model_size
    from .taggers import deserialize
    from .taggers.external import encode_request

    print(f"model_kb\t{model_size(args.model):.3f}")
    print(f"model_compressed_kb\t{compressed_size(args.model, args.preset):.3f}")
    if args.memory:
        model = deserialize(args.model)
        request = args.model[0].parent / 'measure.request'
        request.write_text(encode_request([s.forms for s in read_conllu(args.memory)]), encoding='utf-8')
        try:
            result = measure_memory(model.inference_process(request), args.poll_hz)
        finally:
            request.unlink(missing_ok=True)
        print(f"memory_avg_kb\t{result.avg_kb:.1f}")
        print(f"memory_peak_kb\t{result.peak_kb:.1f}")
        print(f"sample_count\t{result.sample_count}")
    return 0


def cmd_skyline(args) -> int:
    from .metrics import load_records
    from .skyline import skyline_counts, skyline_membership

    path = _records_location(args)
    records = load_records(path)
    for language, skyline in skyline_membership(records, args.size_metric, args.accuracy_metric).items():
        print(f"{language}\t{', '.join(skyline.taggers)}")
    counts = skyline_counts(records, args.size_metric, args.accuracy_metric)
    target = path.parent / f"skyline_counts_{args.size_metric}_{args.accuracy_metric}.csv"
    target.write_text(
        'tagger,count\n' + ''.join(f"{tagger},{count}\n" for tagger, count in counts.items()), encoding='utf-8'
    )
    logger.info(f"Counts written to {target}")
    return 0


def cmd_report(args) -> int:
    from .metrics import load_records
    from .report import build_report

    path = _records_location(args)
    build_report(load_records(path), path.parent / 'report', all_pairs=args.all_pairs)
    return 0


def cmd_serve(args) -> int:
    from .serve import configure_server_logging, serve

    configure_server_logging()
    return asyncio.run(serve(args.model))


COMMANDS = {
    'train': cmd_experiment,
    'evaluate': cmd_experiment,
    'run': cmd_experiment,
    'measure': cmd_measure,
    'skyline': cmd_skyline,
    'report': cmd_report,
    'serve': cmd_serve,
}


def main(argv: Optional[List[str]] = None) -> int:
    load_dotenv()
    args = build_parser().parse_args(argv)
    if args.command != 'serve':
        configure_logging(args.log_level)
    try:
        return COMMANDS[args.command](args)
    except ConfigError as e:
        logger.error(str(e))
        return 1
    except TagmarkError as e:
        logger.error(f"{type(e).__name__}: {e}")
        return 1
    except KeyboardInterrupt:
        logger.warning('interrupted')
        return 1
