"""Built-in symbol lists and role patterns, all overridable via plain text files.

List files hold one entry per line; ``#`` starts a comment.  Role files hold
one ``<role> <regex>`` pair per line, evaluated top to bottom, first match
wins.
"""

from __future__ import annotations

from pathlib import Path

from .errors import RomeoError

# Runtime/libc symbols that keep their names: they carry no label information
# but are crucial signal for vulnerability detection (memcpy, printf, ...).
# Defined-in-object CRT symbols such as _IO_stdin_used must be listed here
# explicitly because the symbol table marks them as defined.
DEFAULT_RUNTIME_ALLOWLIST = frozenset({
    # stdio
    "printf", "fprintf", "sprintf", "snprintf", "vprintf", "vfprintf",
    "puts", "putchar", "fputs", "fputc",
    "scanf", "fscanf", "sscanf",
    "__isoc99_scanf", "__isoc99_fscanf", "__isoc99_sscanf",
    "fgets", "fgetc", "getchar", "gets",
    "fopen", "fclose", "fread", "fwrite", "fflush", "fseek",
    # wide-char variants used throughout Juliet
    "wprintf", "fwprintf", "swprintf", "wcscpy", "wcsncpy", "wcslen",
    "wcscat", "wcsncat", "wmemset", "fgetws",
    # memory and strings
    "malloc", "calloc", "realloc", "free",
    "memcpy", "memmove", "memset", "memcmp",
    "strlen", "strcpy", "strncpy", "strcat", "strncat",
    "strcmp", "strncmp", "strchr", "strstr", "strdup",
    "strtol", "strtoul", "atoi", "atol",
    "alloca", "__builtin_alloca",
    # process and misc libc
    "abs", "labs", "exit", "abort", "_exit", "atexit",
    "rand", "srand", "time", "clock", "signal", "raise",
    "system", "getenv",
    "open", "close", "read", "write",
    "socket", "connect", "bind", "listen", "accept", "recv", "send",
    "htons", "ntohs", "inet_addr",
    # CRT / runtime
    "_IO_stdin_used", "__stack_chk_fail", "__stack_chk_guard",
    "__libc_start_main", "__cxa_finalize", "__cxa_atexit", "__gmon_start__",
    "_ITM_registerTMCloneTable", "_ITM_deregisterTMCloneTable",
    "__errno_location", "__assert_fail",
    "stdin", "stdout", "stderr", "environ",
    "__dso_handle", "__TMC_END__", "__data_start", "__bss_start",
    "_edata", "_end",
})

# Boilerplate/runtime functions never included as context.
DEFAULT_CONTEXT_EXCLUSIONS = frozenset({
    "main",
    "_start",
    "_init",
    "_fini",
    "frame_dummy",
    "register_tm_clones",
    "deregister_tm_clones",
    "__do_global_dtors_aux",
    "__libc_csu_init",
    "__libc_csu_fini",
})

# Empty support stubs linked into every testcase; removed before extraction.
DEFAULT_STUB_NAMES = frozenset(
    {f"good{i}" for i in range(1, 10)} | {f"bad{i}" for i in range(1, 10)}
)

# Ordered (role, regex) rules encoding the Juliet naming conventions.
# Demangled C++ entry points end in "::bad()" / "::good()", hence the
# optional argument-list suffix.
DEFAULT_ROLE_PATTERNS: tuple[tuple[str, str], ...] = (
    ("primary_bad", r"(?:^|[_:])bad(?:\(.*\))?$"),
    ("primary_good", r"(?:^|[_:])good(?:\(.*\))?$"),
    ("secondary_good", r"good.+"),
)


def load_name_list(path: str | Path) -> frozenset[str]:
    """Read a symbol list file: one name per line, # comments allowed."""
    names: set[str] = set()
    for raw in Path(path).read_text(encoding="utf-8").splitlines():
        line = raw.split("#", 1)[0].strip()
        if line:
            names.add(line)
    return frozenset(names)


def load_role_patterns(path: str | Path) -> tuple[tuple[str, str], ...]:
    """Read a role-regex file: ``<role> <regex>`` per line, order preserved."""
    rules: list[tuple[str, str]] = []
    for line_no, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split(None, 1)
        if len(parts) != 2:
            raise RomeoError(f"{path}:{line_no}: expected '<role> <regex>'")
        rules.append((parts[0], parts[1]))
    if not rules:
        raise RomeoError(f"{path}: no role patterns found")
    return tuple(rules)
