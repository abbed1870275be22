"""Exact superreplication pricing under partial information and short-sale constraints."""

from superhedge.errors import (
    DegenerateDualError,
    DocumentParseError,
    DocumentValueError,
    InputError,
    MarketValidationError,
)
from superhedge.lp import LinearProgram, LpOutcome, Row, solve_lp, verify_certificate
from superhedge.market import (
    Claim,
    Market,
    TradingStrategy,
    arbitrage_search,
    strategy_audit,
    validate_market,
)
from superhedge.polyhedra import HPolytope, enumerate_vertices, fourier_motzkin_project
from superhedge.pricing import (
    DualSolution,
    MeasurePolytope,
    PricingReport,
    build_dual_lp,
    build_measure_polytope,
    build_primal_lp,
    check_membership,
    dual_from_measure,
    full_report,
    measure_from_dual,
    price,
)
from superhedge.scenario import (
    Filtration,
    Measure,
    Partition,
    Process,
    ScenarioSpace,
    atom_of,
    conditional_expectation,
    filtration_from_processes,
    refines,
)

from superhedge.cli import run_command
from superhedge.document import parse_market_document, serialize_market_document
from superhedge.report import format_report

__version__ = "0.1.0"
