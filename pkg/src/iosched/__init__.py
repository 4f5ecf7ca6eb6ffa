"""Inter-operator scheduling for CNN computation graphs.

Minimum-latency stage schedules by dynamic programming over block endings,
choosing per stage between operator merge and concurrent execution, with
latencies from a pluggable cost model.
"""
from .analysis import (BoundReport, WidthCertificate, bound_check, complexity_bound, format_sig,
                       graph_width, max_antichain_brute)
from .baselines import (CountReport, brute_force_optimal, count_all, greedy_schedule,
                        sequential_schedule)
from .costs import (PROFILES, AnalyticRoofline, DeviceProfile, LatencyTable, TableCostModel,
                    concurrent_stage_latency, get_profile, group_latency, merged_stage_latency,
                    op_latency, parse_profile, parse_table, stage_descriptor)
from .dot import export_dot
from .errors import (BlockError, CycleError, DanglingRefError, IllegalMergeError, InfeasibleError,
                     IOSError, MismatchError, MissingEntryError, SchemaError, TooLargeError)
from .graph import (Block, BlockView, ComputationGraph, GraphInput, Operator, OperatorKind, OpSet,
                    build_graph, connected_groups, load_graph, parse_graph, serialize_graph,
                    successors_within, topological_order)
from .merging import MergePlan, build_merge, can_merge
from .scheduler import (DEFAULT_PRUNING, MemoTable, NetworkSchedule, PruningStrategy, Schedule,
                        Stage, StageMode, Strategy, dp_schedule, enumerate_endings, evaluate,
                        generate_stage, is_ending, load_schedule, schedule_network,
                        schedule_to_json, simulate, validate_schedule)

__version__ = "0.1.0"
