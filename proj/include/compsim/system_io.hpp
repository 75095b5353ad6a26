#pragma once

#include <optional>
#include <string>

#include "compsim/casa.hpp"
#include "compsim/core.hpp"
#include "compsim/matrix.hpp"

namespace compsim::io {

/// A system read from a definition file, plus the optional initial
/// conditions the file carried.
struct LoadedSystem {
  core::CompartmentalSystem system;
  std::optional<Vector> x0;
  std::optional<Vector> abar0;
};

/// Reads a JSON system definition:
///   {
///     "dimension": d,
///     "base_matrix": [[...], ...],            // d rows of d numbers
///     "matrix_forcing": [[cell, ...], ...],   // optional, d x d cells
///     "base_input": [...],                    // d numbers
///     "input_forcing": [cell, ...],           // optional, d cells
///     "t_min": number | null,                 // open lower bound; null/absent = -inf
///     "casa_overrides": { ... },              // optional CasaParams overrides
///     "x0": [...], "abar0": [...]             // optional initial conditions
///   }
/// A cell is null (constant 1), {"constant": v},
/// {"table": {"t": [...], "v": [...]}}, or {"builtin": "name"}. The
/// builtin names "casa_xi" and "casa_npp" resolve against CasaParams
/// built from casa_overrides (defaults when absent); other names must
/// have been registered with register_builtin_forcing.
LoadedSystem load_system_file(const std::string& path);

/// Same parse from a JSON text string.
LoadedSystem parse_system_text(const std::string& text, const std::string& origin = "<string>");

/// CasaParams from an overrides object held in JSON text; unknown keys
/// are rejected.
casa::CasaParams parse_casa_overrides_text(const std::string& text);

}  // namespace compsim::io
