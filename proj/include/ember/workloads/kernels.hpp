// Reference kernels in the structured-loop input language.
#pragma once

#include <optional>
#include <string>

#include "ember/scf/scf.hpp"

namespace ember::workloads {

enum class Kernel { Sls, Spmm, Mp, Kg, SpAttn };
const char* kernel_name(Kernel k);
std::optional<Kernel> parse_kernel(const std::string& name);
inline constexpr Kernel kAllKernels[] = {Kernel::Sls, Kernel::Spmm, Kernel::Mp, Kernel::Kg, Kernel::SpAttn};

/// Scoring norm of the knowledge-graph kernel: |h + r - t| summed (L1) or
/// squared differences summed (L2 squared).
enum class KgNorm { L1, L2Squared };

std::string kernel_source(Kernel k, KgNorm norm = KgNorm::L1);
scf::Function build_kernel(Kernel k, KgNorm norm = KgNorm::L1);

/// f32 arithmetic operations (abs included) per offloadable table load in
/// the kernel body, as {ops, loads}.
std::pair<int, int> compute_per_lookup(const scf::Function& fn);

}  // namespace ember::workloads
