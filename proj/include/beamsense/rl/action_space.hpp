#pragma once

// Reduced discrete action space: one ternary digit per user.
//   0 -> CU. Previously CU: keep the beam. Previously SU: snap to the estimate.
//   1 -> SU extending to the left:  prev CU: C + [-2,-1,0]; prev SU: min(C) + [-2,-1,0]
//   2 -> SU extending to the right: prev CU: C + [0,1,2];   prev SU: max(C) + [0,1,2]
// Windows that would leave the codebook are shifted back inside it.

#include <cstddef>
#include <span>
#include <vector>

#include "beamsense/array_geometry.hpp"
#include "beamsense/error.hpp"
#include "beamsense/policies.hpp"

namespace beamsense::rl {

inline std::size_t action_space_size(std::size_t users) {
  std::size_t n = 1;
  for (std::size_t u = 0; u < users; ++u) n *= 3;
  return n;
}

// User 0 is the least significant base-3 digit.
inline std::vector<int> action_digits(std::size_t code, std::size_t users) {
  require(code < action_space_size(users), ErrorKind::kInvalidArgument, "action code out of range");
  std::vector<int> digits(users);
  for (std::size_t u = 0; u < users; ++u) {
    digits[u] = static_cast<int>(code % 3);
    code /= 3;
  }
  return digits;
}

inline std::size_t encode_action(std::span<const int> digits) {
  std::size_t code = 0;
  for (std::size_t u = digits.size(); u-- > 0;) {
    require(digits[u] >= 0 && digits[u] <= 2, ErrorKind::kInvalidArgument, "action digit must be 0, 1 or 2");
    code = code * 3 + static_cast<std::size_t>(digits[u]);
  }
  return code;
}

namespace detail {
inline std::vector<std::size_t> window(long start, std::size_t n) {
  long lo = start;
  if (lo < 0) lo = 0;
  if (lo + 2 > static_cast<long>(n) - 1) lo = static_cast<long>(n) - 3;
  return {static_cast<std::size_t>(lo), static_cast<std::size_t>(lo + 1), static_cast<std::size_t>(lo + 2)};
}
}  // namespace detail

inline CompositeBeam decode_user_action(int digit, UserType prev_type, const CompositeBeam& prev_beam,
                                        const UserEstimate& estimate, const Codebook& codebook) {
  require(!prev_beam.empty(), ErrorKind::kInvalidArgument, "decode_action: previous beam required");
  require(codebook.size() >= 3, ErrorKind::kInvalidArgument, "decode_action: codebook too small");
  const bool was_cu = prev_type == UserType::kCommunication;
  const std::size_t n = codebook.size();
  switch (digit) {
    case 0:
      if (was_cu) return prev_beam;
      return cu_beam(estimate.valid ? estimate.aod : prev_beam.center_angle(codebook), codebook);
    case 1: {
      // C + [-2,-1,0] for a single-index C is the window ending at it.
      const long anchor = static_cast<long>(prev_beam.front());
      return CompositeBeam(codebook, detail::window(anchor - 2, n));
    }
    case 2: {
      const long anchor = static_cast<long>(was_cu ? prev_beam.front() : prev_beam.back());
      return CompositeBeam(codebook, detail::window(anchor, n));
    }
    default:
      throw Error(ErrorKind::kInvalidArgument, "action digit must be 0, 1 or 2");
  }
}

inline BeamAssignment decode_action(std::size_t code, std::span<const UserType> prev_types,
                                    std::span<const CompositeBeam> prev_beams, std::span<const UserEstimate> estimates,
                                    const Codebook& codebook) {
  const std::size_t users = prev_types.size();
  require(prev_beams.size() == users && estimates.size() == users, ErrorKind::kInvalidArgument,
          "decode_action: inconsistent user counts");
  const auto digits = action_digits(code, users);
  BeamAssignment out;
  for (std::size_t u = 0; u < users; ++u) {
    out.types.push_back(digits[u] == 0 ? UserType::kCommunication : UserType::kSensing);
    out.beams.push_back(decode_user_action(digits[u], prev_types[u], prev_beams[u], estimates[u], codebook));
  }
  return out;
}

}  // namespace beamsense::rl
