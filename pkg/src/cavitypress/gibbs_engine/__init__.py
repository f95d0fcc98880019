from .bounds import RnBound, SandwichReport, boundary_energy_sup, rn_bound, sandwich_check
from .markov import (ColumnChain, ColumnTransfer, bernoulli_chain, chain_from_transition, column_transfer,
                     gibbs_chain, perron)
from .oracles import (AtomicOracle, BracketOracle, EmpiricalOracle, Integration, MarkovOracle, MeasureOracle,
                      PeriodicOracle, TorusOracle, exact_markov_1d, exact_torus)
from .sampler import glauber_sampler
from .specification import (Bracket, conditional_bracket, log_partition_boundary, log_partition_free,
                            partition_boundary, partition_free, specification_prob)
from .torus import Torus
