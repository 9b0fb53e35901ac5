#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace solitonlab::cli {

enum ExitCode : int
{
  kOk = 0,
  kInternal = 1,
  kUsage = 2,
  kConfig = 3,
  kIo = 4,
  kNumerical = 5,
};

struct ParamSpec
{
  enum class Kind
  {
    Value,  ///< --name VALUE
    Flag,   ///< --name, stored as "true"/"false"
    List,   ///< repeatable --name VALUE, joined with ';'
  };
  std::string name;  ///< config key; the flag is --name with '_' replaced by '-'
  std::string default_value;
  std::string help;
  Kind kind = Kind::Value;
};

using ParamMap = std::map<std::string, std::string>;

/// Parameters accepted by a subcommand. Throws ConfigError for an unknown command.
const std::vector<ParamSpec>& command_params(const std::string& command);

/// Every subcommand that takes a parameter set (all but `run`).
std::vector<std::string> command_names();

/// Defaults of `specs`.
ParamMap defaults(const std::vector<ParamSpec>& specs);

/// `key = value` lines ('#' starts a comment) overlaid on `base`. Keys outside
/// `specs` raise ConfigError naming the key.
ParamMap parse_config_text(const std::string& text, const std::vector<ParamSpec>& specs, ParamMap base);

/// Defaults overlaid by the file at `path`. IoError when unreadable.
ParamMap load_config(const std::string& path, const std::vector<ParamSpec>& specs);

/// Overlays SOLITONLAB_<KEY> environment variables (key upper-cased).
ParamMap apply_environment(const std::vector<ParamSpec>& specs, ParamMap base);

/// Entry point. `args` excludes the program name. Data goes to `out` when an
/// output path is "-"; summaries go to `out` otherwise and to `err` when `out`
/// carries data. Failures print one line
///   error: code=<n> kind=<kind> msg="<text>"
/// to `err` and return the matching ExitCode.
int run(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err);
int run(int argc, const char* const* argv);

} // namespace solitonlab::cli
