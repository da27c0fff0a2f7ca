#ifndef KESTEN_ENSEMBLE_IO_HPP
#define KESTEN_ENSEMBLE_IO_HPP

#include "kesten/ensemble.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>

namespace kesten {

using Json = nlohmann::json;

namespace detail {
inline double number_at(const Json& j, const std::string& where) {
    if (!j.is_number())
        throw InvalidInput(where + ": expected a number, got " + j.dump());
    return j.get<double>();
}

inline Mat parse_matrix(const Json& j, int d, const std::string& where) {
    if (!j.is_array())
        throw InvalidInput(where + ": matrix must be an array");
    Mat m(d, d);
    if (!j.empty() && j.front().is_array()) {
        if (static_cast<int>(j.size()) != d)
            throw InvalidInput(where + ": matrix has " + std::to_string(j.size()) + " rows, expected " +
                               std::to_string(d));
        for (int r = 0; r < d; ++r) {
            const auto& row = j[r];
            if (!row.is_array() || static_cast<int>(row.size()) != d)
                throw InvalidInput(where + ": matrix row " + std::to_string(r) + " has " +
                                   std::to_string(row.is_array() ? row.size() : 0) + " entries, expected " +
                                   std::to_string(d));
            for (int c = 0; c < d; ++c)
                m(r, c) = number_at(row[c], where + ": matrix[" + std::to_string(r) + "][" + std::to_string(c) + "]");
        }
        return m;
    }
    if (static_cast<int>(j.size()) != d * d)
        throw InvalidInput(where + ": matrix has " + std::to_string(j.size()) + " entries, expected " +
                           std::to_string(d * d) + " (row-major)");
    for (int r = 0; r < d; ++r)
        for (int c = 0; c < d; ++c)
            m(r, c) = number_at(j[r * d + c], where + ": matrix entry " + std::to_string(r * d + c));
    return m;
}

inline int parse_dimension(const Json& doc) {
    if (!doc.is_object())
        throw InvalidInput("ensemble document must be a JSON object");
    if (!doc.contains("dimension") || !doc["dimension"].is_number_integer())
        throw InvalidInput("missing integer key 'dimension'");
    const int d = doc["dimension"].get<int>();
    if (d < 1 || d > kMaxDim)
        throw InvalidInput("dimension " + std::to_string(d) + " outside [1, " + std::to_string(kMaxDim) + "]");
    if (!doc.contains("atoms") || !doc["atoms"].is_array() || doc["atoms"].empty())
        throw InvalidInput("missing non-empty array 'atoms'");
    return d;
}
} // namespace detail

/// Reads the linear part; translations, if present, are ignored.
inline LinearEnsemble linear_from_json(const Json& doc) {
    const int d = detail::parse_dimension(doc);
    LinearEnsemble e{d, {}, doc.value("label", std::string{})};
    for (std::size_t i = 0; i < doc["atoms"].size(); ++i) {
        const auto& a = doc["atoms"][i];
        const std::string where = "atom " + std::to_string(i);
        if (!a.is_object() || !a.contains("matrix") || !a.contains("weight"))
            throw InvalidInput(where + ": needs 'matrix' and 'weight'");
        e.atoms.push_back({detail::parse_matrix(a["matrix"], d, where), detail::number_at(a["weight"], where + ": weight")});
    }
    return e;
}

inline bool has_translations(const Json& doc) {
    if (!doc.contains("atoms") || !doc["atoms"].is_array() || doc["atoms"].empty())
        return false;
    for (const auto& a : doc["atoms"])
        if (!a.is_object() || !a.contains("translation"))
            return false;
    return true;
}

/// Reads an affine ensemble; every atom needs a 'translation'.
inline AffineEnsemble affine_from_json(const Json& doc) {
    const LinearEnsemble lin = linear_from_json(doc);
    AffineEnsemble ae{lin.dimension, {}, lin.label};
    for (std::size_t i = 0; i < lin.atoms.size(); ++i) {
        const auto& a = doc["atoms"][i];
        const std::string where = "atom " + std::to_string(i);
        if (!a.contains("translation") || !a["translation"].is_array())
            throw InvalidInput(where + ": missing 'translation' (required for affine commands)");
        const auto& t = a["translation"];
        if (static_cast<int>(t.size()) != lin.dimension)
            throw InvalidInput(where + ": translation has " + std::to_string(t.size()) + " entries, expected " +
                               std::to_string(lin.dimension));
        Vec b(lin.dimension);
        for (int k = 0; k < lin.dimension; ++k)
            b(k) = detail::number_at(t[k], where + ": translation entry " + std::to_string(k));
        ae.atoms.push_back({lin.atoms[i].matrix, b, lin.atoms[i].weight});
    }
    return ae;
}

namespace detail {
inline Json matrix_json(const Mat& m) {
    Json arr = Json::array();
    for (int r = 0; r < m.rows(); ++r)
        for (int c = 0; c < m.cols(); ++c)
            arr.push_back(m(r, c));
    return arr;
}
} // namespace detail

inline Json to_json(const LinearEnsemble& e) {
    Json doc{{"dimension", e.dimension}, {"label", e.label}, {"atoms", Json::array()}};
    for (const auto& a : e.atoms)
        doc["atoms"].push_back({{"matrix", detail::matrix_json(a.matrix)}, {"weight", a.weight}});
    return doc;
}

inline Json to_json(const AffineEnsemble& ae) {
    Json doc{{"dimension", ae.dimension}, {"label", ae.label}, {"atoms", Json::array()}};
    for (const auto& a : ae.atoms) {
        Json t = Json::array();
        for (int k = 0; k < a.translation.size(); ++k)
            t.push_back(a.translation(k));
        doc["atoms"].push_back({{"matrix", detail::matrix_json(a.matrix)}, {"translation", t}, {"weight", a.weight}});
    }
    return doc;
}

/// FNV-1a over a byte string.
inline std::uint64_t fnv1a(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

/// Hash of the ensemble content (dimension, atoms, label), independent of
/// formatting and of any extra keys in the file.
inline std::string content_hash(const Json& doc) {
    Json core;
    for (const char* key : {"dimension", "atoms", "label"})
        if (doc.contains(key))
            core[key] = doc[key];
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << fnv1a(core.dump());
    return os.str();
}

inline Json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw InvalidInput("cannot open '" + path + "'");
    try {
        return Json::parse(in);
    } catch (const Json::parse_error& err) {
        throw InvalidInput("'" + path + "' is not valid JSON: " + err.what());
    }
}

} // namespace kesten

#endif // KESTEN_ENSEMBLE_IO_HPP
