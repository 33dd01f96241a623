"""Movable-antenna physical-layer-security simulator.

Library and CLI for maximizing the worst user's secrecy rate against an
eavesdropper with unknown position, by jointly optimizing transmit
beamforming and antenna positions with an annealed projected-gradient
method, plus fixed-array baselines and Monte-Carlo experiment sweeps.
"""

from .channel import (
    ChannelRealization,
    ChannelWorkspace,
    FrozenGains,
    GainSampler,
    PathSet,
    bob_channel,
    build_realization,
    direction_vector,
    eve_channel,
    sample_path_angles,
    sample_path_gains,
    transmit_frv,
)
from .geometry import (
    ArrayLayout,
    EveRegion,
    InfeasibleRegionError,
    MoveRegion,
    eve_position_from_angles,
    phi_bounds,
    project_box,
    project_min_distance,
    sample_virtual_eves,
    theta_bounds,
)
from .gradients import fd_oracle, grad_t, grad_w, mc_average_grad, run_fd_audit
from .harness import (
    Scenario,
    ScenarioConfig,
    SweepResult,
    build_scenario,
    one_dim_search,
    run_sweep,
    write_results,
)
from .metrics import (
    Beamformer,
    SecrecyReport,
    objective_value,
    secrecy_report,
    sinr_bob,
    sinr_eve,
    worst_user_secrecy,
)
from .optimizer import (
    AdaGradState,
    SaPgaConfig,
    Solution,
    init_beamformer,
    metropolis_accept,
    pga_t,
    pga_w,
    sa_pga,
)

__version__ = "0.1.0"
