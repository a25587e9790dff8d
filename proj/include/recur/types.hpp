#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace recur {

using Eigen::MatrixXd;
using Eigen::VectorXd;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// Number of treatment arms. Arms are 1-based in files and on the command
/// line, 0-based everywhere inside the library.
inline constexpr int kArms = 3;
/// Number of non-N episode classes (S, SB, B).
inline constexpr int kClasses = 3;
/// Default number of latent states.
inline constexpr int kDefaultLatentStates = 4;
/// Fixed exit intensity of the nearly absorbing latent state.
inline constexpr double kAbsorbingIntensity = 1e-5;

enum class Phase : std::uint8_t { N, NonN };

inline constexpr Phase other(Phase p) { return p == Phase::N ? Phase::NonN : Phase::N; }

/// Non-N episode class. The integer value is the 0-based column index used in
/// every tensor and table (S, SB, B order).
enum class NonNClass : std::uint8_t { S = 0, SB = 1, B = 2 };

inline constexpr std::array<NonNClass, kClasses> kAllClasses{NonNClass::S, NonNClass::SB,
                                                             NonNClass::B};

std::string_view to_string(NonNClass c);
std::optional<NonNClass> class_from_string(std::string_view s);
std::string_view to_string(Phase p);

/// Set of NonNClass values, bit i set for class i.
class ClassSet {
 public:
  constexpr ClassSet() = default;
  constexpr explicit ClassSet(std::uint8_t bits) : bits_(bits & 0b111) {}
  static constexpr ClassSet all() { return ClassSet(0b111); }
  static constexpr ClassSet of(NonNClass c) { return ClassSet(std::uint8_t(1u << int(c))); }

  constexpr bool contains(int c) const { return (bits_ >> c) & 1u; }
  constexpr bool contains(NonNClass c) const { return contains(int(c)); }
  constexpr ClassSet with(NonNClass c) const { return ClassSet(bits_ | of(c).bits_); }
  constexpr bool empty() const { return bits_ == 0; }
  constexpr int size() const { return (bits_ & 1) + ((bits_ >> 1) & 1) + ((bits_ >> 2) & 1); }
  constexpr std::uint8_t bits() const { return bits_; }
  /// Smallest member; only meaningful when nonempty.
  constexpr int first() const { return bits_ & 1 ? 0 : (bits_ & 2 ? 1 : 2); }
  constexpr bool operator==(const ClassSet&) const = default;

 private:
  std::uint8_t bits_ = 0;
};

/// Renders e.g. "S|SB"; empty set renders as "".
std::string to_string(ClassSet set);

}  // namespace recur
