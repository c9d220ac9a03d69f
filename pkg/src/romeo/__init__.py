"""romeo: build labeled assembly-language datasets from disassembled testcases."""

__version__ = "0.1.0"

from .disasm import (  # noqa: F401
    FunctionDisassembly,
    Instruction,
    ObjectDisassembly,
    SymbolEntry,
    SymbolRef,
    SymbolTable,
    extract_callees,
    parse_disassembly,
    parse_symbol_table,
)
from .errors import (  # noqa: F401
    DatasetError,
    ParseError,
    PipelineError,
    RomeoError,
    ScrambleError,
    TokenizerError,
)
from .transform import (  # noqa: F401
    Locality,
    RenderedFunction,
    RenderWarnings,
    ScrambleTable,
    build_scramble_table,
    classify_locality,
    make_locality,
    normalize_instruction,
    render_function,
)
from .extract import (  # noqa: F401
    Example,
    Role,
    RoleClassifier,
    TestcaseMeta,
    build_context,
    classify_role,
    compute_roles,
    emit_examples,
    parse_testcase_meta,
    strip_support_stubs,
)
from .dataset import (  # noqa: F401
    DatasetBundle,
    DatasetStats,
    DedupResult,
    assign_label,
    compute_stats,
    deduplicate,
    filter_subset,
    load,
    serialize,
    split,
)
from .bpe import (  # noqa: F401
    BpeModel,
    LengthStats,
    decode,
    encode,
    length_stats,
    load_model,
    save_model,
    train_bpe,
)
from .pipeline import PipelineConfig, build_dataset, ingest_tree  # noqa: F401
