#pragma once

#include <string>

#include "dmbpn/tensor.hpp"

namespace dmbpn {

/// Checkpoint format (text, one record per parameter tensor):
///
///   dmbpn-checkpoint v1
///   fingerprint <config identity string>
///   tensor <name> <trainable 0|1> <ndim> <d0> [d1 ...]
///   <hexfloat values, space separated, one line>
///   ...
///
/// Values are written as C hexfloats, so a save/load round trip restores
/// every parameter bit for bit.
void checkpoint_save(const ParamRegistry& registry, const std::string& fingerprint,
                     const std::string& path);

/// Loads into a fresh registry. Throws CheckpointError when the stored
/// fingerprint differs from `expected_fingerprint` or the file is malformed.
ParamRegistry checkpoint_load(const std::string& path,
                              const std::string& expected_fingerprint);

/// Copies values from `src` into `dst` for every name in `dst`; shapes must
/// match. Used to restore a loaded checkpoint into a live model whose code
/// holds stable Tensor pointers.
void copy_values(const ParamRegistry& src, ParamRegistry& dst);

/// Reads just the fingerprint line (for error messages and tooling).
std::string checkpoint_fingerprint(const std::string& path);

}  // namespace dmbpn
