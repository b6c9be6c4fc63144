#include "cogdec/checkpoint.hpp"

#include <cstdio>

#include <json.hpp>

#include "cogdec/errors.hpp"

namespace cogdec {

namespace {

using nlohmann::json;

json parse_header(const Bundle& bundle, const std::filesystem::path& path) {
    try {
        return json::parse(bundle.header_json);
    } catch (const json::exception& e) {
        throw data_error("bad checkpoint header in " + path.string() + ": " + e.what());
    }
}

json stamp_json(const RunStamp& stamp) {
    return json{{"config_hash", stamp.config_hash}, {"seed", stamp.seed}};
}

RunStamp stamp_from(const json& header) {
    RunStamp stamp;
    if (header.contains("stamp")) {
        stamp.config_hash = header["stamp"].value("config_hash", "");
        stamp.seed = header["stamp"].value("seed", std::uint64_t{0});
    }
    return stamp;
}

Matrix vec_block(const Vector& v) { return Matrix(v); }

Vector block_vec(const Matrix& m) {
    if (m.cols() != 1) throw data_error("expected a column block");
    return Vector(m.col(0));
}

}  // namespace

std::string hash_text(const std::string& text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

void save_model(const LinearDecoder& model, const std::filesystem::path& path,
                const RunStamp& stamp) {
    json header;
    header["kind"] = "baseline";
    header["lambda"] = model.lambda;
    header["input_space"] =
        model.input_space == InputSpace::voxels ? "voxels" : "dictionary";
    if (model.dictionary_ref) header["dictionary_ref"] = *model.dictionary_ref;
    header["class_names"] = model.class_names;
    header["stamp"] = stamp_json(stamp);
    write_bundle(path, header.dump(),
                 {{"W", model.W}, {"b", vec_block(model.b)}});
}

void save_model(const MultiStudyModel& model, const std::filesystem::path& path,
                const RunStamp& stamp) {
    json header;
    header["kind"] = "multistudy";
    header["alpha_in"] = model.alpha_in;
    header["bn_momentum"] = model.bn.momentum;
    header["bn_epsilon"] = model.bn.epsilon;
    header["stamp"] = stamp_json(stamp);
    std::vector<std::pair<std::string, Matrix>> blocks;
    blocks.emplace_back("D", model.D.D);
    blocks.emplace_back("L", model.L);
    blocks.emplace_back("bn_running_mean", vec_block(model.bn.running_mean));
    blocks.emplace_back("bn_running_var", vec_block(model.bn.running_var));
    blocks.emplace_back("bn_gamma", vec_block(model.bn.gamma));
    blocks.emplace_back("bn_beta", vec_block(model.bn.beta_affine));
    json studies = json::array();
    for (const auto& head : model.heads) {
        studies.push_back({{"id", head.study_id},
                           {"class_names", head.class_names},
                           {"alpha", head.alpha}});
        blocks.emplace_back("U_" + head.study_id, head.U);
        blocks.emplace_back("b_" + head.study_id, vec_block(head.b));
    }
    header["studies"] = std::move(studies);
    write_bundle(path, header.dump(), blocks);
}

void save_model(const ConsensusModel& model, const std::filesystem::path& path,
                const RunStamp& stamp) {
    json header;
    header["kind"] = "consensus";
    header["sparsity"] = model.sparsity;
    header["stamp"] = stamp_json(stamp);
    std::vector<std::pair<std::string, Matrix>> blocks;
    blocks.emplace_back("D", model.D.D);
    blocks.emplace_back("L_bar", model.L_bar);
    json studies = json::array();
    for (const auto& head : model.heads) {
        studies.push_back({{"id", head.study_id}, {"class_names", head.class_names}});
        blocks.emplace_back("U_" + head.study_id, head.U);
        blocks.emplace_back("b_" + head.study_id, vec_block(head.b));
    }
    header["studies"] = std::move(studies);
    write_bundle(path, header.dump(), blocks);
}

LinearDecoder load_decoder(const std::filesystem::path& path) {
    const Bundle bundle = read_bundle(path);
    const json header = parse_header(bundle, path);
    if (header.value("kind", "") != "baseline")
        throw data_error("checkpoint kind mismatch: expected baseline in " +
                         path.string());
    LinearDecoder model;
    model.lambda = header.at("lambda").get<double>();
    model.input_space = header.at("input_space").get<std::string>() == "voxels"
                            ? InputSpace::voxels
                            : InputSpace::dictionary;
    if (header.contains("dictionary_ref"))
        model.dictionary_ref = header["dictionary_ref"].get<std::string>();
    model.class_names = header.at("class_names").get<std::vector<std::string>>();
    model.W = bundle.block("W");
    model.b = block_vec(bundle.block("b"));
    return model;
}

MultiStudyModel load_multistudy(const std::filesystem::path& path) {
    const Bundle bundle = read_bundle(path);
    const json header = parse_header(bundle, path);
    if (header.value("kind", "") != "multistudy")
        throw data_error("checkpoint kind mismatch: expected multistudy in " +
                         path.string());
    MultiStudyModel model;
    model.alpha_in = header.at("alpha_in").get<double>();
    model.D.D = bundle.block("D");
    model.L = bundle.block("L");
    model.bn.momentum = header.at("bn_momentum").get<double>();
    model.bn.epsilon = header.at("bn_epsilon").get<double>();
    model.bn.running_mean = block_vec(bundle.block("bn_running_mean"));
    model.bn.running_var = block_vec(bundle.block("bn_running_var"));
    model.bn.gamma = block_vec(bundle.block("bn_gamma"));
    model.bn.beta_affine = block_vec(bundle.block("bn_beta"));
    for (const auto& entry : header.at("studies")) {
        StudyHead head;
        head.study_id = entry.at("id").get<std::string>();
        head.class_names = entry.at("class_names").get<std::vector<std::string>>();
        head.alpha = entry.at("alpha").get<double>();
        head.U = bundle.block("U_" + head.study_id);
        head.b = block_vec(bundle.block("b_" + head.study_id));
        model.heads.push_back(std::move(head));
    }
    return model;
}

ConsensusModel load_consensus(const std::filesystem::path& path) {
    const Bundle bundle = read_bundle(path);
    const json header = parse_header(bundle, path);
    if (header.value("kind", "") != "consensus")
        throw data_error("checkpoint kind mismatch: expected consensus in " +
                         path.string());
    ConsensusModel model;
    model.sparsity = header.value("sparsity", 0.0);
    model.D.D = bundle.block("D");
    model.L_bar = bundle.block("L_bar");
    for (const auto& entry : header.at("studies")) {
        ConsensusHead head;
        head.study_id = entry.at("id").get<std::string>();
        head.class_names = entry.at("class_names").get<std::vector<std::string>>();
        head.U = bundle.block("U_" + head.study_id);
        head.b = block_vec(bundle.block("b_" + head.study_id));
        model.heads.push_back(std::move(head));
    }
    return model;
}

AnyModel load_model(const std::filesystem::path& path) {
    const Bundle bundle = read_bundle(path);
    const json header = parse_header(bundle, path);
    const std::string kind = header.value("kind", "");
    if (kind == "baseline") return load_decoder(path);
    if (kind == "multistudy") return load_multistudy(path);
    if (kind == "consensus") return load_consensus(path);
    throw data_error("unknown checkpoint kind '" + kind + "' in " + path.string());
}

RunStamp load_stamp(const std::filesystem::path& path) {
    const Bundle bundle = read_bundle(path);
    return stamp_from(parse_header(bundle, path));
}

}  // namespace cogdec
