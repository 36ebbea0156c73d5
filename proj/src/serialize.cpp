#include "pwqnet/serialize.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace pwqnet {

namespace {

void emit_number(std::ostream& os, double v)
{
    if (!std::isfinite(v)) {
        os << "null";
        return;
    }
    if (v == 0.0 && std::signbit(v)) {
        os << "-0.0";  // "-0" would parse back as the integer 0
        return;
    }
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    os << buf;
}

bool is_flat(const Json& j)
{
    if (!j.is_array())
        return false;
    for (const auto& e : j)
        if (e.is_array() || e.is_object())
            return false;
    return true;
}

void emit(std::ostream& os, const Json& j, int indent)
{
    const std::string pad(static_cast<std::size_t>(indent), ' ');
    const std::string inner(static_cast<std::size_t>(indent + 2), ' ');
    switch (j.type()) {
    case Json::value_t::number_float:
        emit_number(os, j.get<double>());
        break;
    case Json::value_t::object: {
        if (j.empty()) {
            os << "{}";
            break;
        }
        os << "{\n";
        bool first = true;
        for (auto it = j.begin(); it != j.end(); ++it) {
            if (!first)
                os << ",\n";
            first = false;
            os << inner << Json(it.key()).dump() << ": ";
            emit(os, it.value(), indent + 2);
        }
        os << "\n" << pad << "}";
        break;
    }
    case Json::value_t::array: {
        if (is_flat(j)) {
            os << "[";
            for (std::size_t i = 0; i < j.size(); ++i) {
                if (i)
                    os << ", ";
                emit(os, j[i], indent);
            }
            os << "]";
            break;
        }
        os << "[\n";
        for (std::size_t i = 0; i < j.size(); ++i) {
            if (i)
                os << ",\n";
            os << inner;
            emit(os, j[i], indent + 2);
        }
        os << "\n" << pad << "]";
        break;
    }
    default:
        os << j.dump();
    }
}

double number(const Json& doc, const char* key)
{
    if (!doc.contains(key) || !doc.at(key).is_number())
        throw Error(ErrorCode::ParseError, std::string("missing numeric field '") + key + "'");
    return doc.at(key).get<double>();
}

Interval1D interval(const Json& doc, const char* key)
{
    if (!doc.contains(key) || !doc.at(key).is_array() || doc.at(key).size() != 2)
        throw Error(ErrorCode::ParseError, std::string("field '") + key + "' must be [lower, upper]");
    return Interval1D(doc.at(key)[0].get<double>(), doc.at(key)[1].get<double>());
}

Json vector_json(const Eigen::VectorXd& v)
{
    Json out = Json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i)
        out.push_back(v[i]);
    return out;
}

Eigen::VectorXd vector_from(const Json& j)
{
    if (!j.is_array())
        throw Error(ErrorCode::ParseError, "expected a numeric array");
    Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i)
        v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
    return v;
}

std::string kind_of(const Json& doc) { return doc.contains("kind") ? doc.at("kind").get<std::string>() : ""; }

}  // namespace

std::string dump_document(const Json& doc)
{
    std::ostringstream os;
    emit(os, doc, 0);
    os << "\n";
    return os.str();
}

Json parse_document(const std::string& text)
{
    try {
        return Json::parse(text);
    } catch (const Json::exception& e) {
        throw Error(ErrorCode::ParseError, e.what());
    }
}

Json network_to_json(const ReluNetwork& net)
{
    Json doc;
    doc["kind"] = "relu_network";
    doc["feature_map"] = net.feature_map().tag();
    doc["layers"] = Json::array();
    for (const auto& L : net.layers()) {
        Json W = Json::array();
        for (Eigen::Index r = 0; r < L.W.rows(); ++r)
            W.push_back(vector_json(L.W.row(r).transpose()));
        doc["layers"].push_back({{"W", W}, {"a", vector_json(L.a)}});
    }
    doc["meta"] = Json::object();
    for (const auto& [k, v] : net.meta())
        doc["meta"][k] = v;
    return doc;
}

ReluNetwork network_from_json(const Json& doc)
{
    try {
        if (!doc.contains("feature_map") || !doc.contains("layers"))
            throw Error(ErrorCode::ParseError, "network document needs 'feature_map' and 'layers'");
        const auto fm = FeatureMap::parse_tag(doc.at("feature_map").get<std::string>());
        std::vector<Layer> layers;
        for (const auto& l : doc.at("layers")) {
            const auto& W = l.at("W");
            const auto rows = static_cast<Eigen::Index>(W.size());
            const auto cols = rows > 0 ? static_cast<Eigen::Index>(W[0].size()) : 0;
            Layer layer{Eigen::MatrixXd(rows, cols), vector_from(l.at("a"))};
            for (Eigen::Index r = 0; r < rows; ++r) {
                const auto& row = W[static_cast<std::size_t>(r)];
                if (static_cast<Eigen::Index>(row.size()) != cols)
                    throw Error(ErrorCode::ShapeMismatch, "ragged weight matrix");
                for (Eigen::Index c = 0; c < cols; ++c)
                    layer.W(r, c) = row[static_cast<std::size_t>(c)].get<double>();
            }
            layers.push_back(std::move(layer));
        }
        std::map<std::string, std::string> meta;
        if (doc.contains("meta"))
            for (auto it = doc.at("meta").begin(); it != doc.at("meta").end(); ++it)
                meta[it.key()] = it.value().is_string() ? it.value().get<std::string>() : it.value().dump();
        return ReluNetwork(fm, std::move(layers), std::move(meta));
    } catch (const Json::exception& e) {
        throw Error(ErrorCode::ParseError, e.what());
    }
}

std::string serialize_network(const ReluNetwork& net) { return dump_document(network_to_json(net)); }

ReluNetwork deserialize_network(const std::string& text) { return network_from_json(parse_document(text)); }

Json problem_to_json(const MpcProblem1D& p)
{
    return {{"kind", "problem"},
            {"A", p.A},
            {"B", p.B},
            {"Q", p.Q},
            {"R", p.R},
            {"P", p.P},
            {"X", {p.X.lower(), p.X.upper()}},
            {"U", {p.U.lower(), p.U.upper()}},
            {"T", {p.T.lower(), p.T.upper()}},
            {"N", p.N}};
}

MpcProblem1D problem_from_json(const Json& doc)
{
    try {
        const Json& d = kind_of(doc) == "solution" ? doc.at("problem") : doc;
        if (!d.contains("N") || !d.at("N").is_number_integer())
            throw Error(ErrorCode::ParseError, "missing integer field 'N'");
        MpcProblem1D p{number(d, "A"), number(d, "B"), number(d, "Q"), number(d, "R"), number(d, "P"),
                       interval(d, "X"), interval(d, "U"), interval(d, "T"), d.at("N").get<int>()};
        p.validate();
        return p;
    } catch (const Json::exception& e) {
        throw Error(ErrorCode::ParseError, e.what());
    }
}

Json pwq_to_json(const PwqFunction1D& pwq)
{
    Json pieces = Json::array();
    for (const auto& p : pwq.pieces())
        pieces.push_back({{"lower", p.region.lower()}, {"upper", p.region.upper()}, {"S", p.q.S}, {"l", p.q.l}, {"c", p.q.c}});
    return {{"kind", "pwq"}, {"pieces", pieces}};
}

PwqFunction1D pwq_from_json(const Json& doc)
{
    try {
        std::vector<QuadPiece> pieces;
        for (const auto& p : doc.at("pieces"))
            pieces.push_back({Interval1D(number(p, "lower"), number(p, "upper")),
                              Quadratic{number(p, "S"), number(p, "l"), number(p, "c")}});
        return PwqFunction1D(std::move(pieces));
    } catch (const Json::exception& e) {
        throw Error(ErrorCode::ParseError, e.what());
    }
}

Json pwa_to_json(const PwaFunction1D& pwa)
{
    Json pieces = Json::array();
    for (const auto& p : pwa.pieces())
        pieces.push_back({{"lower", p.region.lower()},
                          {"upper", p.region.upper()},
                          {"K", vector_json(p.gain)},
                          {"b", vector_json(p.offset)}});
    return {{"kind", "pwa"}, {"pieces", pieces}};
}

PwaFunction1D pwa_from_json(const Json& doc)
{
    try {
        std::vector<AffinePiece> pieces;
        for (const auto& p : doc.at("pieces")) {
            Interval1D region(number(p, "lower"), number(p, "upper"));
            auto vec = [&](const char* key) {
                const auto& v = p.at(key);
                return v.is_number() ? Eigen::VectorXd::Constant(1, v.get<double>()) : vector_from(v);
            };
            pieces.push_back({region, vec("K"), vec("b")});
        }
        return PwaFunction1D(std::move(pieces));
    } catch (const Json::exception& e) {
        throw Error(ErrorCode::ParseError, e.what());
    }
}

Json solution_to_json(const MpcProblem1D& problem, const std::vector<DpStageResult>& stages)
{
    Json doc;
    doc["kind"] = "solution";
    doc["problem"] = problem_to_json(problem);
    doc["horizon"] = static_cast<int>(stages.size()) - 1;
    const auto& last = stages.back();
    doc["feasible"] = {last.feasible.lower(), last.feasible.upper()};
    doc["value"] = pwq_to_json(last.value);
    doc["policy"] = last.policy ? pwa_to_json(*last.policy) : Json(nullptr);
    doc["stages"] = Json::array();
    for (std::size_t k = 0; k < stages.size(); ++k) {
        const auto& s = stages[k];
        doc["stages"].push_back({{"k", static_cast<int>(k)},
                                 {"feasible", {s.feasible.lower(), s.feasible.upper()}},
                                 {"value", pwq_to_json(s.value)},
                                 {"policy", s.policy ? pwa_to_json(*s.policy) : Json(nullptr)}});
    }
    return doc;
}

Reference reference_from_json(const Json& doc)
{
    const auto kind = kind_of(doc);
    if (kind == "pwq")
        return pwq_from_json(doc);
    if (kind == "pwa")
        return pwa_from_json(doc);
    if (kind == "solution") {
        auto p = problem_from_json(doc.at("problem"));
        if (doc.contains("horizon"))
            p.N = doc.at("horizon").get<int>();
        p.validate();
        return p;
    }
    if (kind == "problem" || kind.empty())
        return problem_from_json(doc);
    throw Error(ErrorCode::ParseError, "unsupported reference kind '" + kind + "'");
}

}  // namespace pwqnet
