#include "attn/config.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "attn/errors.hpp"
#include "attn/io.hpp"

namespace attn {

using Json = nlohmann::ordered_json;

namespace {

std::string join_key(const std::string& path, const std::string& key)
{
    return path.empty() ? key : path + "." + key;
}

/// Reads members of one JSON object, remembering which keys were consumed.
class ObjectReader {
public:
    ObjectReader(const Json& j, std::string path) : j_(j), path_(std::move(path))
    {
        if (!j_.is_object()) {
            throw ValidationError("config key '" + (path_.empty() ? std::string("<root>") : path_)
                                  + "' must be an object");
        }
    }

    const Json* find(const std::string& key)
    {
        seen_.insert(key);
        const auto it = j_.find(key);
        return it == j_.end() ? nullptr : &*it;
    }

    std::string key(const std::string& k) const { return join_key(path_, k); }

    void number(const std::string& k, double& out)
    {
        if (const Json* v = find(k)) {
            if (!v->is_number()) {
                throw ValidationError("config key '" + key(k) + "' must be a number");
            }
            out = v->get<double>();
        }
    }

    template <typename Int>
    void integer(const std::string& k, Int& out)
    {
        if (const Json* v = find(k)) {
            if (!v->is_number_integer()) {
                throw ValidationError("config key '" + key(k) + "' must be an integer");
            }
            if constexpr (std::is_unsigned_v<Int>) {
                if (v->is_number_unsigned()) {
                    out = v->get<Int>();
                    return;
                }
                throw ValidationError("config key '" + key(k) + "' must be non-negative");
            } else {
                out = v->get<Int>();
            }
        }
    }

    void boolean(const std::string& k, bool& out)
    {
        if (const Json* v = find(k)) {
            if (!v->is_boolean()) {
                throw ValidationError("config key '" + key(k) + "' must be true or false");
            }
            out = v->get<bool>();
        }
    }

    void string(const std::string& k, std::string& out)
    {
        if (const Json* v = find(k)) {
            if (!v->is_string()) {
                throw ValidationError("config key '" + key(k) + "' must be a string");
            }
            out = v->get<std::string>();
        }
    }

    void numbers(const std::string& k, std::vector<double>& out)
    {
        if (const Json* v = find(k)) {
            if (!v->is_array()) {
                throw ValidationError("config key '" + key(k) + "' must be an array of numbers");
            }
            out.clear();
            for (const Json& e : *v) {
                if (!e.is_number()) {
                    throw ValidationError("config key '" + key(k) + "' must be an array of numbers");
                }
                out.push_back(e.get<double>());
            }
        }
    }

    void finish() const
    {
        for (const auto& [k, v] : j_.items()) {
            if (!seen_.contains(k)) {
                throw ValidationError("unknown config key '" + key(k) + "'");
            }
        }
    }

private:
    const Json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

template <typename Fn>
void section(ObjectReader& parent, const std::string& k, Fn&& fn)
{
    if (const Json* v = parent.find(k)) {
        ObjectReader r(*v, parent.key(k));
        fn(r);
        r.finish();
    }
}

const char* units_name(GazeUnits u)
{
    return u == GazeUnits::pixels ? "pixels" : "normalized";
}

const char* mode_name(FusionMode m)
{
    return m == FusionMode::channel ? "channel" : "marked";
}

Json step_to_json(const AugmentStep& step)
{
    Json j = std::visit(
            [](const auto& op) -> Json {
                using T = std::decay_t<decltype(op)>;
                if constexpr (std::is_same_v<T, FlipOp>) {
                    return {{"op", "flip_h"}};
                } else if constexpr (std::is_same_v<T, BrightnessOp>) {
                    return {{"op", "brightness"}, {"factor", op.factor}};
                } else if constexpr (std::is_same_v<T, HsvOp>) {
                    return {{"op", "hsv"},
                            {"hue_deg", op.magnitudes.hue_deg},
                            {"saturation", op.magnitudes.saturation},
                            {"value", op.magnitudes.value}};
                } else if constexpr (std::is_same_v<T, TranslateOp>) {
                    return {{"op", "translate"}, {"fx", op.fx}, {"fy", op.fy}, {"jitter", op.jitter}};
                } else if constexpr (std::is_same_v<T, ScaleOp>) {
                    return {{"op", "scale"}, {"s", op.s}, {"jitter", op.jitter}};
                } else {
                    return {{"op", "mosaic"}, {"rescale", op.rescale}};
                }
            },
            step.op);
    j["p"] = step.probability;
    return j;
}

AugmentStep step_from_json(const Json& j, const std::string& path)
{
    ObjectReader r(j, path);
    std::string name;
    r.string("op", name);
    AugmentStep step;
    r.number("p", step.probability);
    if (name == "flip_h") {
        step.op = FlipOp{};
    } else if (name == "brightness") {
        BrightnessOp op;
        r.number("factor", op.factor);
        step.op = op;
    } else if (name == "hsv") {
        HsvOp op;
        r.number("hue_deg", op.magnitudes.hue_deg);
        r.number("saturation", op.magnitudes.saturation);
        r.number("value", op.magnitudes.value);
        step.op = op;
    } else if (name == "translate") {
        TranslateOp op;
        r.number("fx", op.fx);
        r.number("fy", op.fy);
        r.number("jitter", op.jitter);
        step.op = op;
    } else if (name == "scale") {
        ScaleOp op;
        r.number("s", op.s);
        r.number("jitter", op.jitter);
        step.op = op;
    } else if (name == "mosaic") {
        MosaicOp op;
        r.boolean("rescale", op.rescale);
        step.op = op;
    } else {
        throw ValidationError("config key '" + r.key("op") + "': unknown augmentation '" + name + "'");
    }
    r.finish();
    return step;
}

Json to_json(const PipelineConfig& c)
{
    Json transform = Json::array();
    const auto& m = c.ingest.transform.matrix();
    for (int r = 0; r < 3; ++r) {
        transform.push_back({m[3 * r], m[3 * r + 1], m[3 * r + 2]});
    }
    Json augment = Json::array();
    for (const AugmentStep& s : c.augment) {
        augment.push_back(step_to_json(s));
    }
    Json j;
    j["seed"] = c.seed;
    j["workers"] = c.workers;
    j["decay"] = {{"rate", c.decay.rate}, {"sigma", c.decay.sigma}, {"truncation_radius", c.decay.truncation_radius}};
    j["ingest"] = {{"window_ns", c.ingest.sync.window_ns},
                   {"max_points", c.ingest.sync.max_points},
                   {"gaze_units", units_name(c.ingest.units)},
                   {"transform", transform},
                   {"crop_upper_third", c.ingest.crop_upper_third}};
    j["augment"] = augment;
    j["fusion"] = {{"mode", mode_name(c.fusion.mode)},
                   {"mark",
                    {{"radius", c.fusion.mark.radius},
                     {"color", {c.fusion.mark.color[0], c.fusion.mark.color[1], c.fusion.mark.color[2]}},
                     {"alpha", c.fusion.mark.alpha}}}};
    const TrainConfig& t = c.train;
    j["train"] = {{"net",
                   {{"input_channels", t.net.input_channels},
                    {"base_width", t.net.base_width},
                    {"depth", t.net.depth},
                    {"leaky_slope", t.net.leaky_slope}}},
                  {"optim",
                   {{"learning_rate", t.optim.learning_rate},
                    {"weight_decay", t.optim.weight_decay},
                    {"beta1", t.optim.beta1},
                    {"beta2", t.optim.beta2},
                    {"epsilon", t.optim.epsilon}}},
                  {"loss", {{"beta", t.loss.beta}}},
                  {"epochs", t.epochs},
                  {"batch_size", t.batch_size}};
    j["eval"] = {{"factors", c.eval.factors},
                 {"fractions", c.eval.fractions},
                 {"budget_samples", c.eval.budget_samples},
                 {"budget_validation_samples", c.eval.budget_validation_samples},
                 {"budget_epochs", c.eval.budget_epochs},
                 {"budget_geometry", {c.eval.budget_geometry.height, c.eval.budget_geometry.width}},
                 {"budget_width", c.eval.budget_width}};
    j["io"] = {{"out_dir", c.io.out_dir}};
    return j;
}

PipelineConfig from_json(const Json& j)
{
    PipelineConfig c;
    ObjectReader root(j, "");
    root.integer("seed", c.seed);
    root.integer("workers", c.workers);
    section(root, "decay", [&](ObjectReader& r) {
        r.number("rate", c.decay.rate);
        r.number("sigma", c.decay.sigma);
        r.number("truncation_radius", c.decay.truncation_radius);
    });
    section(root, "ingest", [&](ObjectReader& r) {
        r.integer("window_ns", c.ingest.sync.window_ns);
        r.integer("max_points", c.ingest.sync.max_points);
        std::string units = units_name(c.ingest.units);
        r.string("gaze_units", units);
        if (units == "pixels") {
            c.ingest.units = GazeUnits::pixels;
        } else if (units == "normalized") {
            c.ingest.units = GazeUnits::normalized;
        } else {
            throw ValidationError("config key 'ingest.gaze_units' must be \"pixels\" or \"normalized\"");
        }
        if (const Json* t = r.find("transform")) {
            const std::string bad = "config key 'ingest.transform' must be a 3x3 array of numbers";
            if (!t->is_array() || t->size() != 3) {
                throw ValidationError(bad);
            }
            std::array<double, 9> m{};
            for (std::size_t row = 0; row < 3; ++row) {
                const Json& rj = (*t)[row];
                if (!rj.is_array() || rj.size() != 3) {
                    throw ValidationError(bad);
                }
                for (std::size_t col = 0; col < 3; ++col) {
                    if (!rj[col].is_number()) {
                        throw ValidationError(bad);
                    }
                    m[3 * row + col] = rj[col].get<double>();
                }
            }
            c.ingest.transform = CameraTransform(m);
        }
        r.boolean("crop_upper_third", c.ingest.crop_upper_third);
    });
    if (const Json* a = root.find("augment")) {
        if (!a->is_array()) {
            throw ValidationError("config key 'augment' must be an array of steps");
        }
        c.augment.clear();
        for (std::size_t i = 0; i < a->size(); ++i) {
            c.augment.push_back(step_from_json((*a)[i], "augment[" + std::to_string(i) + "]"));
        }
    }
    section(root, "fusion", [&](ObjectReader& r) {
        std::string mode = mode_name(c.fusion.mode);
        r.string("mode", mode);
        if (mode == "channel") {
            c.fusion.mode = FusionMode::channel;
        } else if (mode == "marked") {
            c.fusion.mode = FusionMode::marked;
        } else {
            throw ValidationError("config key 'fusion.mode' must be \"channel\" or \"marked\"");
        }
        section(r, "mark", [&](ObjectReader& m) {
            m.integer("radius", c.fusion.mark.radius);
            m.number("alpha", c.fusion.mark.alpha);
            if (const Json* col = m.find("color")) {
                const std::string bad = "config key 'fusion.mark.color' must be three integers in [0, 255]";
                if (!col->is_array() || col->size() != 3) {
                    throw ValidationError(bad);
                }
                for (std::size_t i = 0; i < 3; ++i) {
                    const Json& v = (*col)[i];
                    if (!v.is_number_integer() || v.get<int>() < 0 || v.get<int>() > 255) {
                        throw ValidationError(bad);
                    }
                    c.fusion.mark.color[i] = static_cast<std::uint8_t>(v.get<int>());
                }
            }
        });
    });
    section(root, "train", [&](ObjectReader& r) {
        TrainConfig& t = c.train;
        section(r, "net", [&](ObjectReader& n) {
            n.integer("input_channels", t.net.input_channels);
            n.integer("base_width", t.net.base_width);
            n.integer("depth", t.net.depth);
            n.number("leaky_slope", t.net.leaky_slope);
        });
        section(r, "optim", [&](ObjectReader& o) {
            o.number("learning_rate", t.optim.learning_rate);
            o.number("weight_decay", t.optim.weight_decay);
            o.number("beta1", t.optim.beta1);
            o.number("beta2", t.optim.beta2);
            o.number("epsilon", t.optim.epsilon);
        });
        section(r, "loss", [&](ObjectReader& l) { l.number("beta", t.loss.beta); });
        r.integer("epochs", t.epochs);
        r.integer("batch_size", t.batch_size);
    });
    section(root, "eval", [&](ObjectReader& r) {
        r.numbers("factors", c.eval.factors);
        r.numbers("fractions", c.eval.fractions);
        r.integer("budget_samples", c.eval.budget_samples);
        r.integer("budget_validation_samples", c.eval.budget_validation_samples);
        r.integer("budget_epochs", c.eval.budget_epochs);
        if (const Json* g = r.find("budget_geometry")) {
            if (!g->is_array() || g->size() != 2 || !(*g)[0].is_number_integer() || !(*g)[1].is_number_integer()) {
                throw ValidationError("config key 'eval.budget_geometry' must be [height, width]");
            }
            c.eval.budget_geometry = {(*g)[0].get<int>(), (*g)[1].get<int>()};
        }
        r.integer("budget_width", c.eval.budget_width);
    });
    section(root, "io", [&](ObjectReader& r) { r.string("out_dir", c.io.out_dir); });
    root.finish();
    c.validate();
    return c;
}

} // namespace

std::vector<AugmentStep> PipelineConfig::default_augment_steps()
{
    return {
            {MosaicOp{true}, 1.0},
            {TranslateOp{0.0, 0.0, 0.2}, 1.0},
            {ScaleOp{1.0, 0.5}, 1.0},
            {HsvOp{}, 1.0},
            {FlipOp{}, 0.5},
    };
}

void PipelineConfig::validate() const
{
    if (workers < 0) {
        throw ValidationError("workers must be >= 0");
    }
    decay.validate();
    if (ingest.sync.window_ns < 0) {
        throw ValidationError("ingest.window_ns must be >= 0");
    }
    if (ingest.sync.max_points < 1) {
        throw ValidationError("ingest.max_points must be >= 1");
    }
    AugmentSpec{augment, 0}.validate();
    fusion.mark.validate();
    train.validate();
    if (eval.factors.empty()) {
        throw ValidationError("eval.factors must not be empty");
    }
    for (double f : eval.factors) {
        if (!(f >= 0.1 && f <= 3.0)) {
            throw ValidationError("eval.factors entries must lie in [0.1, 3.0]");
        }
    }
    if (eval.fractions.empty()) {
        throw ValidationError("eval.fractions must not be empty");
    }
    for (double f : eval.fractions) {
        if (!(f > 0.0 && f <= 1.0)) {
            throw ValidationError("eval.fractions entries must lie in (0, 1]");
        }
    }
    if (eval.budget_epochs < 1) {
        throw ValidationError("eval.budget_epochs must be >= 1");
    }
    budget_experiment().validate();
}

BudgetExperiment PipelineConfig::budget_experiment() const
{
    BudgetExperiment e;
    e.samples = eval.budget_samples;
    e.validation_samples = eval.budget_validation_samples;
    e.geometry = eval.budget_geometry;
    e.fractions = eval.fractions;
    e.epochs = eval.budget_epochs;
    e.train.net.input_channels = 3;
    e.train.net.width = eval.budget_width;
    e.train.net.image_height = eval.budget_geometry.height;
    e.train.net.image_width = eval.budget_geometry.width;
    e.train.net.leaky_slope = train.net.leaky_slope;
    e.train.optim = train.optim;
    e.train.batch_size = train.batch_size;
    return e;
}

PipelineConfig parse_config(const std::string& json_text)
{
    Json j;
    try {
        j = Json::parse(json_text);
    } catch (const Json::parse_error& e) {
        throw ValidationError(std::string("config is not valid JSON: ") + e.what());
    }
    return from_json(j);
}

PipelineConfig load_config(const std::filesystem::path& path)
{
    auto in = open_input(path);
    std::ostringstream text;
    text << in.rdbuf();
    try {
        return parse_config(text.str());
    } catch (const ValidationError& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
}

std::string config_to_json(const PipelineConfig& cfg)
{
    return to_json(cfg).dump(2) + "\n";
}

std::string config_hash(const PipelineConfig& cfg)
{
    // The worker count never changes results, so it stays out of the hash.
    Json j = to_json(cfg);
    j.erase("workers");
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : j.dump()) {
        h = (h ^ ch) * 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string apply_overrides(const std::string& base_json,
                            const std::vector<std::pair<std::string, std::string>>& overrides)
{
    Json j = Json::parse(base_json);
    for (const auto& [path, text] : overrides) {
        Json value;
        try {
            value = Json::parse(text);
        } catch (const Json::parse_error&) {
            try {
                value = Json::parse("[" + text + "]");
                if (text.find(',') == std::string::npos) {
                    value = text;
                }
            } catch (const Json::parse_error&) {
                value = text;
            }
        }
        Json* node = &j;
        std::string::size_type start = 0;
        while (true) {
            const auto dot = path.find('.', start);
            const std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
            if (key.empty() || !node->is_object() || !node->contains(key)) {
                throw ValidationError("unknown config key '" + path + "'");
            }
            node = &(*node)[key];
            if (dot == std::string::npos) {
                break;
            }
            start = dot + 1;
        }
        *node = value;
    }
    return j.dump();
}

} // namespace attn
