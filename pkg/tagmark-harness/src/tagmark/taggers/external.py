"""
Adapter for tagger executables speaking the line-based wire protocol.

The harness writes one token per line, a blank line after each sentence
and "##EOF##" at the end; the tagger answers with one tag per line in
the same framing. Writing, reading stdout and draining stderr run
concurrently so large inputs cannot deadlock on full pipes.
"""

import asyncio
import os
import subprocess
import threading
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Sequence, Union

from loguru import logger

from ..errors import ExternalTaggerError, ProtocolError
from .base import ProcessSpec

END_OF_STREAM = '##EOF##'
PLACEHOLDERS = ('train', 'dev', 'model_dir', 'language', 'seed')


def encode_request(sentences: Sequence[Sequence[str]]) -> str:
    return ''.join(''.join(form + '\n' for form in forms) + '\n' for forms in sentences) + END_OF_STREAM + '\n'


def decode_reply(text_lines: Sequence[str]) -> List[List[str]]:
    """Split reply lines into per-sentence tag lists; stops at ##EOF##."""
    sentences: List[List[str]] = []
    current: List[str] = []
    for line in text_lines:
        line = line.rstrip('\r\n')
        if line == END_OF_STREAM:
            break
        if line:
            current.append(line)
        else:
            sentences.append(current)
            current = []
    if current:
        sentences.append(current)
    return sentences


def expand(arguments: Sequence[str], values: Mapping[str, object]) -> List[str]:
    """Fill {train}, {dev}, {model_dir}, {language}, {seed} placeholders."""
    try:
        return [argument.format(**values) for argument in arguments]
    except KeyError as e:
        raise ExternalTaggerError(f"unknown placeholder {e} in command {list(arguments)}") from None


def check_alignment(sentences: Sequence[Sequence[str]], replies: Sequence[Sequence[str]]):
    for i, forms in enumerate(sentences):
        if i >= len(replies):
            raise ProtocolError(f"tagger returned {len(replies)} sentences, expected {len(sentences)}", i)
        if len(replies[i]) != len(forms):
            raise ProtocolError(
                f"sentence {i}: sent {len(forms)} tokens, received {len(replies[i])} tags", i
            )
    if len(replies) > len(sentences):
        raise ProtocolError(
            f"tagger returned {len(replies)} sentences, expected {len(sentences)}", len(sentences)
        )


class ExternalTagger:
    """
    A tagger run as a child process.

    Args:
        name: identifier used in records and logs
        command: argv of the tagging process, placeholders allowed
        env: extra environment variables
        cwd: working directory of the child
        artifacts: files whose bytes count as the trained model
        train_command: optional argv run once before tagging
        values: placeholder values ({train}, {dev}, {model_dir}, {language}, {seed})
    """

    def __init__(
        self,
        name: str,
        command: Sequence[str],
        env: Optional[Mapping[str, str]] = None,
        cwd: Optional[Union[str, Path]] = None,
        artifacts: Sequence[Union[str, Path]] = (),
        train_command: Optional[Sequence[str]] = None,
        values: Optional[Mapping[str, object]] = None,
    ):
        if not command:
            raise ExternalTaggerError(f"{name}: empty command")
        self.name = name
        self.values: Dict[str, object] = dict(values or {})
        self.command = expand(command, self.values)
        self.train_command = expand(train_command, self.values) if train_command else None
        self.env = dict(env or {})
        self.cwd = Path(cwd) if cwd else None
        self.artifacts = [Path(a) for a in expand([str(a) for a in artifacts], self.values)]
        # one child process at a time per adapter
        self._lock = threading.Lock()

    @classmethod
    def from_process(cls, name: str, spec: ProcessSpec, artifacts: Sequence[Path] = ()) -> 'ExternalTagger':
        return cls(name, spec.argv, env=spec.env, cwd=spec.cwd, artifacts=artifacts)

    def _env(self) -> Dict[str, str]:
        return {**os.environ, **self.env}

    def train(self):
        """Run the declared training command, if any."""
        if not self.train_command:
            return
        logger.info(f"{self.name}: running training command {' '.join(self.train_command)}")
        result = subprocess.run(
            self.train_command, cwd=self.cwd, env=self._env(),
            stdout=subprocess.PIPE, stderr=subprocess.PIPE, text=True, check=False,
        )
        if result.returncode != 0:
            raise ExternalTaggerError(
                f"{self.name}: training command failed", returncode=result.returncode, stderr=result.stderr
            )

    def tag_sentences(self, sentences: Sequence[Sequence[str]]) -> List[List[str]]:
        with self._lock:
            return asyncio.run(self.tag_async(sentences))

    async def tag_async(self, sentences: Sequence[Sequence[str]]) -> List[List[str]]:
        sentences = [list(forms) for forms in sentences]
        try:
            process = await asyncio.create_subprocess_exec(
                *self.command,
                stdin=asyncio.subprocess.PIPE,
                stdout=asyncio.subprocess.PIPE,
                stderr=asyncio.subprocess.PIPE,
                cwd=self.cwd,
                env=self._env(),
            )
        except OSError as e:
            raise ExternalTaggerError(f"{self.name}: cannot start {self.command[0]}: {e}") from e

        async def write():
            try:
                process.stdin.write(encode_request(sentences).encode('utf-8'))
                await process.stdin.drain()
            except (BrokenPipeError, ConnectionResetError):
                logger.warning(f"{self.name}: tagger closed its input early")
            finally:
                process.stdin.close()

        async def read() -> List[str]:
            lines = []
            while True:
                raw = await process.stdout.readline()
                if not raw:
                    break
                line = raw.decode('utf-8')
                lines.append(line)
                if line.rstrip('\r\n') == END_OF_STREAM:
                    break
            return lines

        _, lines, stderr = await asyncio.gather(write(), read(), process.stderr.read())
        await process.stdout.read()
        returncode = await process.wait()
        if returncode != 0:
            raise ExternalTaggerError(
                f"{self.name}: tagger exited with status {returncode}",
                returncode=returncode,
                stderr=stderr.decode('utf-8', errors='replace'),
            )

        replies = decode_reply(lines)
        check_alignment(sentences, replies)
        return replies

    def artifact_files(self) -> List[Path]:
        return list(self.artifacts)

    def inference_process(self, input_path: Path) -> ProcessSpec:
        return ProcessSpec(argv=list(self.command), env=dict(self.env), cwd=self.cwd, stdin_path=Path(input_path))

    def __repr__(self) -> str:
        return f"ExternalTagger(name={self.name!r}, command={self.command!r})"


def external_tag(tagger: ExternalTagger, sentences: Sequence[Sequence[str]]) -> List[List[str]]:
    return tagger.tag_sentences(sentences)
