#pragma once

#include <string_view>

namespace perp {

/// Three-valued truth for structural facts that may not be derivable
/// symbolically. Consumers treat Unknown as "not established".
enum class Tri { False, True, Unknown };

constexpr Tri to_tri(bool b) { return b ? Tri::True : Tri::False; }

constexpr Tri operator&&(Tri a, Tri b) {
  if (a == Tri::False || b == Tri::False) return Tri::False;
  if (a == Tri::True && b == Tri::True) return Tri::True;
  return Tri::Unknown;
}

constexpr Tri operator||(Tri a, Tri b) {
  if (a == Tri::True || b == Tri::True) return Tri::True;
  if (a == Tri::False && b == Tri::False) return Tri::False;
  return Tri::Unknown;
}

constexpr Tri operator!(Tri a) {
  if (a == Tri::Unknown) return a;
  return a == Tri::True ? Tri::False : Tri::True;
}

constexpr std::string_view to_string(Tri t) {
  switch (t) {
    case Tri::True: return "true";
    case Tri::False: return "false";
    default: return "unknown";
  }
}

}  // namespace perp
