"""hermsplit - Hermite-spectral, arbitrary-order splitting solvers for the 2D Gross-Pitaevskii equation."""

from .benchmarks import CellTimeout as CellTimeout
from .benchmarks import CostRecord as CostRecord
from .benchmarks import benchmark as benchmark
from .benchmarks import run as run
from .config import RunConfig as RunConfig
from .context import SolverContext as SolverContext
from .dynamics import DiagnosticsRecord as DiagnosticsRecord
from .dynamics import EvolutionAborted as EvolutionAborted
from .dynamics import EvolutionConfig as EvolutionConfig
from .dynamics import EvolutionResult as EvolutionResult
from .dynamics import PeriodError as PeriodError
from .dynamics import evolve as evolve
from .dynamics import measure_period as measure_period
from .event import Event as Event
from .flows import FlowPair as FlowPair
from .flows import FlowRegime as FlowRegime
from .flows import ModelParams as ModelParams
from .ground_state import DivergenceError as DivergenceError
from .ground_state import GroundStateConfig as GroundStateConfig
from .ground_state import GroundStateResult as GroundStateResult
from .ground_state import descend as descend
from .ground_state import refine_tau as refine_tau
from .hermite import GridField as GridField
from .hermite import MassMismatchError as MassMismatchError
from .hermite import QuadratureError as QuadratureError
from .hermite import SpectralBasis as SpectralBasis
from .hermite import SpectralField as SpectralField
from .hermite import build_basis as build_basis
from .report import Artifacts as Artifacts
from .report import emit_report as emit_report
from .seeds import make_seed as make_seed
from .seeds import seed as seed
from .splitting import SplittingScheme as SplittingScheme
from .splitting import build_scheme as build_scheme
from .splitting import composite_step as composite_step
