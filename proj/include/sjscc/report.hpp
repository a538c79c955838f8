#ifndef SJSCC_REPORT_HPP
#define SJSCC_REPORT_HPP

#include <string>

#include "sjscc/evaluator.hpp"

namespace sjscc::eval {

/// Each emitter writes delimited tables plus a self-contained SVG plot into
/// out_dir (created if absent). Output bytes are a pure function of the
/// result object, so re-emission is byte-identical and plots can always be
/// regenerated from the tables.

/// data.csv (one row per sweep point) and plot.svg (accuracy and SSIM
/// against the eavesdropper SNR).
void emit_sweep(const SweepResult& r, const std::string& out_dir);

/// data.csv (one row per trained cell), gaps.csv (one row per matched
/// secure/insecure pair) and plot.svg (per-cell accuracy and SSIM bars).
void emit_ablation(const AblationReport& r, const std::string& out_dir);

/// data.csv (one row per grid cell) and plot.svg (accuracy-shaded alpha x w
/// grid annotated with SSIM).
void emit_surface(const SurfaceResult& r, const std::string& out_dir);

/// Inverse of the emitters, reading the tables back so plots can be
/// regenerated from data files alone. Derived statistics are recomputed;
/// emitting a read-back result is byte-identical to the original emission.
SweepResult read_sweep(const std::string& dir);
AblationReport read_ablation(const std::string& dir);
SurfaceResult read_surface(const std::string& dir);

}  // namespace sjscc::eval

#endif
