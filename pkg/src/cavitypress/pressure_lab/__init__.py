from .cavity import (CavityEstimate, DecompositionResult, L1Defect, NetResult, cavity_at_depth, cavity_pressure,
                     centered_chain, decomposition_check, decomposition_sweep, first_below, information, information_net, l1_defect, l1_defect_series, past_ball,
                     with_partition)
from .entropy import entropy_decomposition, variational_gap
from .series import (ConvergenceSeries, SeriesEntry, ergodic_average, model_hash, point_pattern, pressure_sequence,
                     shifted, smb_ratio_series)
from .transfer import (StripBracket, StripTransfer, isotropic, strip_bracket, strip_pressure_2d, strip_transfer,
                       transfer_pressure_1d)
