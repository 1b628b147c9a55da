from .local_search import ls_postprocess, two_opt
from .moead import moead_run, neighborhoods
from .mogls import MOGLSConfig, mogls_run
from .nsga2 import crowding_distance, fast_nondominated_sort, nsga2_run
from .operators import order_crossover, variation

__all__ = [
    "MOGLSConfig",
    "crowding_distance",
    "fast_nondominated_sort",
    "ls_postprocess",
    "moead_run",
    "mogls_run",
    "neighborhoods",
    "nsga2_run",
    "order_crossover",
    "two_opt",
    "variation",
]
