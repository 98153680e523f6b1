// Six agents on St(2,4) with identical frequencies: print the ensemble
// diameter and the potential as the ensemble contracts to a point.

#include <cstdio>

#include "stsync/diagnostics.hpp"

int main() {
    using namespace stsync;
    const std::size_t n = 4, p = 2, agents = 6;
    Rng rng(7);
    const StiefelPoint base = random_stiefel(n, p, rng);
    const EnsembleState initial = near_consensus(base, agents, 0.4, rng);
    const ModelConfig cfg(1.0, Topology::all_to_all(agents), FrequencySet::common(agents, 0.5 * rng.skew(p)), n, p);

    IntegratorConfig ic;
    ic.h = 1e-2;
    ic.t_end = 20.0;
    ic.record_stride = 200;
    const Trajectory traj = integrate(initial, cfg, ic);

    std::printf("%6s  %12s  %12s  %10s\n", "t", "diameter", "potential", "drift");
    for (std::size_t k = 0; k < traj.size(); ++k) {
        std::printf("%6.1f  %12.4e  %12.4e  %10.2e\n", traj.times[k], traj.diameters[k],
                    potential(traj.states[k], cfg.topology()), traj.drift[k]);
    }
    const ConsensusResult c = consensus_status(traj, 4.0, 1e-6);
    std::printf("consensus: %s\n", to_string(c.kind));
    return 0;
}
