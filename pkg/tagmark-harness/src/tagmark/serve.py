"""
Stdio tagger server: a built-in model behind the external-tagger wire protocol.

    request:  one token per line, a blank line ends a sentence,
              "##EOF##" ends the stream
    reply:    one tag per line in the same framing

stdout carries the protocol, so only warnings and errors are logged (stderr).
Used as the isolated inference process for memory measurement.
"""

import asyncio
import sys
from pathlib import Path
from typing import List, Optional, TextIO

from loguru import logger

from .taggers import TaggerModel, deserialize

END_OF_STREAM = '##EOF##'


class TaggerServer:
    """Accumulates tokens and answers each completed sentence."""

    def __init__(self, model: TaggerModel, output: TextIO):
        self.model = model
        self.output = output
        self.pending: List[str] = []
        self.sentences = 0

    def handle_line(self, line: str) -> bool:
        """Process one input line; False once the stream has ended."""
        line = line.rstrip('\r\n')
        if line == END_OF_STREAM:
            if self.pending:
                self._reply()
            self.output.write(END_OF_STREAM + '\n')
            self.output.flush()
            return False
        if line:
            self.pending.append(line)
        else:
            self._reply()
        return True

    def _reply(self):
        tags = self.model.tag(self.pending) if self.pending else []
        self.output.write(''.join(tag + '\n' for tag in tags) + '\n')
        self.output.flush()
        self.pending = []
        self.sentences += 1

    def close(self):
        """Input ended without the terminator: answer what is pending."""
        if self.pending:
            logger.warning('input ended without ##EOF##; tagging the pending sentence')
            self._reply()


async def serve(model_path: Path, stdin: Optional[TextIO] = None, stdout: Optional[TextIO] = None) -> int:
    stdin = stdin or sys.stdin
    server = TaggerServer(deserialize([model_path]), stdout or sys.stdout)
    loop = asyncio.get_running_loop()

    while True:
        try:
            line = await loop.run_in_executor(None, stdin.readline)
            if not line:
                server.close()
                break
            if not server.handle_line(line):
                break
        except KeyboardInterrupt:
            break
    return 0


def configure_server_logging():
    logger.remove()
    logger.add(sys.stderr, level='WARNING', format='{time} - {name} - {level} - {message}')
