#include "popac/model_io.hpp"

#include "popac/errors.hpp"

#include <cmath>
#include <fstream>
#include <set>

namespace popac {

using nlohmann::json;

namespace {

constexpr double kLoadTolerance = 1e-9;

std::size_t read_count(const json& doc, const char* key) {
    const auto& v = doc.at(key);
    if (!v.is_number_unsigned()) throw StructuralError(std::string("field '") + key + "' must be a nonnegative integer");
    return v.get<std::size_t>();
}

Vector read_vector(const json& v, std::size_t n, const std::string& what) {
    if (!v.is_array() || v.size() != n) throw StructuralError(what + " must be an array of length " + std::to_string(n));
    Vector out(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
        if (!v[i].is_number()) throw StructuralError(what + " has a non-numeric entry");
        out(static_cast<Eigen::Index>(i)) = v[i].get<double>();
    }
    return out;
}

Matrix read_matrix(const json& v, std::size_t rows, std::size_t cols, const std::string& what) {
    if (!v.is_array() || v.size() != rows)
        throw StructuralError(what + " must have " + std::to_string(rows) + " rows");
    Matrix out(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (std::size_t r = 0; r < rows; ++r)
        out.row(static_cast<Eigen::Index>(r)) = read_vector(v[r], cols, what + " row " + std::to_string(r)).transpose();
    return out;
}

void normalize_columns(Matrix& m, const std::string& what) {
    if (!is_column_stochastic(m, kLoadTolerance)) throw StructuralError(what + " is not column-stochastic");
    for (Eigen::Index c = 0; c < m.cols(); ++c) m.col(c) /= m.col(c).sum();
}

}  // namespace

json vector_to_json(const Vector& v) {
    json out = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
    return out;
}

json matrix_to_json(const Matrix& m) {
    json out = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) out.push_back(vector_to_json(m.row(r).transpose()));
    return out;
}

json model_to_json(const TabularPOMDP& m) {
    json doc;
    doc["states"] = m.num_states;
    doc["actions"] = m.num_actions;
    doc["observations"] = m.num_observations;
    doc["horizon"] = m.horizon;
    doc["reward_max"] = m.reward_max;
    doc["b1"] = vector_to_json(m.initial_belief);
    doc["T"] = json::array();
    for (const auto& t : m.transitions) doc["T"].push_back(matrix_to_json(t));
    doc["O"] = matrix_to_json(m.observation);
    doc["R"] = json::array();
    for (const auto& r : m.rewards) doc["R"].push_back(vector_to_json(r));
    return doc;
}

TabularPOMDP model_from_json(const json& doc) {
    static const std::set<std::string> known{"states", "actions", "observations", "horizon", "reward_max",
                                             "b1",     "T",       "O",            "R"};
    if (!doc.is_object()) throw StructuralError("model document must be an object");
    for (const auto& [key, _] : doc.items())
        if (!known.contains(key)) throw StructuralError("unknown field '" + key + "'");
    for (const auto& key : known)
        if (!doc.contains(key)) throw StructuralError("missing field '" + key + "'");

    TabularPOMDP m;
    m.num_states = read_count(doc, "states");
    m.num_actions = read_count(doc, "actions");
    m.num_observations = read_count(doc, "observations");
    m.horizon = read_count(doc, "horizon");
    if (!doc["reward_max"].is_number()) throw StructuralError("field 'reward_max' must be numeric");
    m.reward_max = doc["reward_max"].get<double>();

    m.initial_belief = read_vector(doc["b1"], m.num_states, "b1");
    if (!is_probability_vector(m.initial_belief, kLoadTolerance)) throw StructuralError("b1 is not a distribution");
    m.initial_belief /= m.initial_belief.sum();

    const auto& T = doc["T"];
    if (!T.is_array() || T.size() != m.num_actions) throw StructuralError("T must hold one matrix per action");
    for (std::size_t a = 0; a < m.num_actions; ++a) {
        Matrix t = read_matrix(T[a], m.num_states, m.num_states, "T[" + std::to_string(a) + "]");
        normalize_columns(t, "T[" + std::to_string(a) + "]");
        m.transitions.push_back(std::move(t));
    }
    m.observation = read_matrix(doc["O"], m.num_observations, m.num_states, "O");
    normalize_columns(m.observation, "O");

    const auto& R = doc["R"];
    if (!R.is_array() || R.size() != m.num_actions) throw StructuralError("R must hold one vector per action");
    for (std::size_t a = 0; a < m.num_actions; ++a)
        m.rewards.push_back(read_vector(R[a], m.num_states, "R[" + std::to_string(a) + "]"));

    check_structure(m);
    return m;
}

void save_model(const TabularPOMDP& model, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    out << model_to_json(model).dump(2) << '\n';
}

TabularPOMDP load_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot read " + path.string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw StructuralError(std::string("malformed model document: ") + e.what());
    }
    return model_from_json(doc);
}

}  // namespace popac
