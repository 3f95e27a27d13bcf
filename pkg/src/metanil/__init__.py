"""Metabelian nilpotent groups acting on the interval by C^(1+alpha) maps."""

from .catalog import catalog, load_spec, resolve_group
from .coset import BoxIndex, CosetAction
from .group import GroupElement, GroupPresentation, parse_word
from .intervals import AmbiguousLocation, ParameterError, make_params
from .realization import build, glue, verify_relations
from .regularity import dkn_verdict, holder_report, path_sum_search
from .structure import structure, triangularize

__version__ = "0.1.0"
