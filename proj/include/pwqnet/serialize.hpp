#pragma once

// Text documents exchanged by the command line tool. All documents are JSON;
// floating point numbers are printed with 17 significant digits so that
// parsing them back reproduces the original doubles bit for bit.

#include "pwqnet/explicit_mpc.hpp"
#include "pwqnet/types.hpp"

#include <json.hpp>

#include <string>
#include <variant>

namespace pwqnet {

using Json = nlohmann::json;

/// Pretty-prints with %.17g numbers; arrays of scalars stay on one line.
std::string dump_document(const Json& doc);
Json parse_document(const std::string& text);

Json network_to_json(const ReluNetwork& net);
ReluNetwork network_from_json(const Json& doc);
std::string serialize_network(const ReluNetwork& net);
ReluNetwork deserialize_network(const std::string& text);

Json problem_to_json(const MpcProblem1D& problem);
MpcProblem1D problem_from_json(const Json& doc);

Json pwq_to_json(const PwqFunction1D& pwq);
PwqFunction1D pwq_from_json(const Json& doc);
Json pwa_to_json(const PwaFunction1D& pwa);
PwaFunction1D pwa_from_json(const Json& doc);

/// Solution document: problem, final value/policy/feasible set and every stage.
Json solution_to_json(const MpcProblem1D& problem, const std::vector<DpStageResult>& stages);

/// Anything `verify` accepts as ground truth. A problem (or a solution, which
/// embeds its problem) is re-solved on demand.
using Reference = std::variant<PwqFunction1D, PwaFunction1D, MpcProblem1D>;
Reference reference_from_json(const Json& doc);

}  // namespace pwqnet
