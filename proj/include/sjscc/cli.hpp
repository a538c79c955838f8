#ifndef SJSCC_CLI_HPP
#define SJSCC_CLI_HPP

namespace sjscc::cli {

/// Parses one verb (train, eval, sweep, ablate, surface, report) plus its
/// flags and dispatches. Returns 0 on success, nonzero after printing a
/// diagnostic. Flags override config-file values, which override built-in
/// defaults; --seed reseeds every rng stream; --desk-scale applies the
/// reduced preset. Every run directory receives a config snapshot.
int run(int argc, const char* const* argv);

}  // namespace sjscc::cli

#endif
