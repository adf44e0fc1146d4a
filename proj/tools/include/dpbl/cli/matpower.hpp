#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>

#include "dpbl/network.hpp"

namespace dpbl::cli {

enum class CaseErrorKind {
  MissingBlock,
  MalformedRow,
  MultipleSlack,
  MissingSlack,
  QuadraticCostUnsupported,
  DisconnectedNetwork,
  InvalidData,
  Io,
};

const char* to_string(CaseErrorKind kind);

class CaseError : public std::runtime_error {
 public:
  CaseError(CaseErrorKind kind, const std::string& what, int line = 0);

  CaseErrorKind kind() const { return kind_; }
  /// 1-based source line, 0 when not tied to a row.
  int line() const { return line_; }

 private:
  CaseErrorKind kind_;
  int line_;
};

/// Parses the supported MATPOWER subset (baseMVA, bus, gen, branch, gencost)
/// into per-unit quantities. Out-of-service generators and branches are
/// dropped; a bus carries a demand iff its Pd is nonzero.
Case parse_matpower(std::string_view text);

Case read_matpower(const std::filesystem::path& path);

/// Inverse of parse_matpower on the supported subset. Demand entries are
/// written into the Pd column of the demand buses.
std::string emit_matpower(const Network& network, const DemandVector& demand,
                          std::string_view name = "mpc");

}  // namespace dpbl::cli
