"""Exception types shared across the pipeline."""

from __future__ import annotations


class RomeoError(Exception):
    """Base class for all pipeline errors."""


class ParseError(RomeoError):
    """Disassembly, symbol-table or filename text that violates the input grammar."""

    def __init__(self, message: str, line_no: int | None = None):
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)
        self.line_no = line_no


class ScrambleError(RomeoError):
    """Symbol scrambling cannot proceed (capacity exhausted or missing mapping)."""


class DatasetError(RomeoError):
    """Dataset assembly or (de)serialization failure."""


class TokenizerError(RomeoError):
    """BPE training, encoding or model-file failure."""


class PipelineError(RomeoError):
    """Fatal error in a pipeline stage; carries stage and testcase context."""

    def __init__(self, stage: str, message: str, testcase_id: str | None = None):
        ctx = f"stage {stage}"
        if testcase_id:
            ctx += f", testcase {testcase_id}"
        super().__init__(f"{ctx}: {message}")
        self.stage = stage
        self.testcase_id = testcase_id
