// Minimal end-to-end example: build the loop output state, sweep one
// analyzer through a coincidence fringe, fit the visibility.
#include <cmath>
#include <cstdio>
#include <vector>

#include "loopsim/experiment.hpp"

using namespace loopsim;

int main() {
    const LoopConfig loop = make_loop(2500.0, 1250.0, 1551e-9, 1549.4e-9, 1.468, 0.0, 0.0);
    const PumpConfig pump{1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0)};
    const TwoPhotonState state = build_output_state(pump, loop);
    std::printf("relative phase %.3f rad\n\n", relative_phase_full(loop));

    const DetectionConfig det; // lossless, noiseless, mu = 0.01
    const RunSpec run{1000000, 42, 1};
    std::vector<AnalyzerSetting> settings;
    for (int k = 0; k < 19; ++k)
        settings.push_back({10.0 * k, 0.0, Orientation::same_handed});
    const std::vector<ScanPoint> points = scan_settings(state, settings, det, run);
    for (const ScanPoint& p : points)
        std::printf("theta1 = %5.1f deg   coincidences per gate = %.6f\n",
                    p.setting.theta1_deg, coincidence_rate(p.counts).value);

    const FringeFit fit = fit_visibility(fringe_data(points, true, ScanAxis::theta1));
    std::printf("\nfitted visibility %.4f +/- %.4f, peak at %.1f deg\n", fit.visibility,
                fit.sigma_visibility, fit.peak_deg);
    return 0;
}
