#pragma once

#include <stdexcept>
#include <string>

namespace vmse {

/// Exception carrying the originating module and a short machine-readable kind,
/// so the CLI can report failures with module provenance.
class Error : public std::runtime_error {
 public:
  Error(std::string module, std::string kind, const std::string& message)
      : std::runtime_error(message), module_(std::move(module)), kind_(std::move(kind)) {}

  const std::string& module() const noexcept { return module_; }
  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string module_;
  std::string kind_;
};

}  // namespace vmse
