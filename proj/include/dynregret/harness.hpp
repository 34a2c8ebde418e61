#pragma once

// Command-line assembly: dotted-key config files, per-command key
// allowlists, environment/strategy factories, and deterministic writers for
// the run CSV and the manifest.  Everything is callable in-process so tests
// can drive commands directly; the CLI binary is a thin shell that maps the
// error taxonomy onto exit codes.
//
// Determinism contract: identical command + config + seed produce
// byte-identical stdout, CSV, and manifest.  Output files never contain
// timestamps, hostnames, or build info.

#include <iosfwd>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "dynregret/protocol.hpp"

namespace dynregret {

// Raw config: dotted keys to uninterpreted strings.  std::map keeps the
// canonical echo (and therefore the config hash) independent of input order.
using ConfigMap = std::map<std::string, std::string>;

// Parses `key = value` lines; '#' starts a comment, blank lines are skipped.
// Malformed lines and duplicate keys raise ValidationError naming the line.
ConfigMap parse_config_text(const std::string& text);
ConfigMap load_config_file(const std::string& path);

// Typed readers.  Missing key yields the default; a present but malformed
// value raises ValidationError naming the key.
std::string cfg_str(const ConfigMap& cfg, const std::string& key, const std::string& def);
std::string cfg_require(const ConfigMap& cfg, const std::string& key);
long long cfg_int(const ConfigMap& cfg, const std::string& key, long long def);
std::uint64_t cfg_u64(const ConfigMap& cfg, const std::string& key, std::uint64_t def);
double cfg_double(const ConfigMap& cfg, const std::string& key, double def);
bool cfg_bool(const ConfigMap& cfg, const std::string& key, bool def);
Vec cfg_vec(const ConfigMap& cfg, const std::string& key);  // comma-separated

// Sorted `key=value` lines; the manifest's config_hash is the FNV-1a of this
// string, so two configs hash equal exactly when they resolve identically.
std::string canonical_echo(const ConfigMap& cfg);
std::string config_hash(const ConfigMap& cfg);

// Factories.  Unknown kinds raise ValidationError naming the offending value.
std::shared_ptr<Environment> make_environment(const ConfigMap& cfg);
std::unique_ptr<Learner> make_learner(const ConfigMap& cfg, const Environment& env);
std::unique_ptr<Adversary> make_adversary(const ConfigMap& cfg);

// Runs one subcommand (run, stability, bound, oracle, rademacher, slope)
// against the already-merged config.  Resolves defaults into an effective
// config, rejects keys outside the command's allowlist, writes outputs under
// the resolved out directory, and logs summary lines as `key=value`.
// Throws the common error taxonomy; the CLI maps it to exit codes.
void dispatch_command(const std::string& command, const ConfigMap& cfg, std::ostream& log);

}  // namespace dynregret
