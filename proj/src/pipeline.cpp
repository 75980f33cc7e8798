#include "attn/pipeline.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "attn/annotations.hpp"
#include "attn/attention.hpp"
#include "attn/errors.hpp"
#include "attn/fusion.hpp"
#include "attn/io.hpp"
#include "attn/kernels.hpp"
#include "attn/random.hpp"
#include "attn/train.hpp"

namespace attn {

using Json = nlohmann::ordered_json;

namespace {

/// Runs `fn`, prefixing validation messages with the file they came from.
template <typename Fn>
auto with_file(const fs::path& path, Fn&& fn)
{
    try {
        return fn();
    } catch (const ParseError& e) {
        throw ParseError(e.line(), path.string() + ": " + e.what());
    } catch (const ValidationError& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
}

std::vector<GazeSample> load_gaze(const fs::path& path)
{
    require_input(path, "gaze recording");
    auto in = open_input(path);
    return with_file(path, [&] { return parse_gaze(in); });
}

std::vector<FrameManifestEntry> load_manifest(const fs::path& path)
{
    require_input(path, "frame manifest");
    auto in = open_input(path);
    return with_file(path, [&] { return parse_manifest(in); });
}

std::vector<BoxAnnotation> load_boxes(const fs::path& path)
{
    require_input(path, "box annotations");
    auto in = open_input(path);
    return with_file(path, [&] { return parse_boxes(in); });
}

std::vector<Detection> load_detections(const fs::path& path)
{
    require_input(path, "detections");
    auto in = open_input(path);
    return with_file(path, [&] { return parse_detections(in); });
}

std::vector<Command> load_commands(const fs::path& path)
{
    require_input(path, "commands");
    auto in = open_input(path);
    return with_file(path, [&] {
        std::vector<Command> out;
        std::string line;
        std::size_t n = 0;
        while (std::getline(in, line)) {
            ++n;
            if (line.find_first_not_of(" \t\r") == std::string::npos) {
                continue;
            }
            try {
                const Json j = Json::parse(line);
                out.push_back({j.at("steering").get<double>(), j.at("velocity").get<double>()});
            } catch (const Json::exception& e) {
                throw ParseError(n, std::string("bad command line: ") + e.what());
            }
        }
        return out;
    });
}

void write_text(const fs::path& path, const std::string& text)
{
    auto out = open_output(path);
    out << text;
    if (!out) {
        throw IoError("failed writing " + path.string());
    }
}

void make_dirs(const fs::path& dir)
{
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) {
        throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
    }
}

Image to_rgb(const Image& in)
{
    if (in.channels() == 3) {
        return in;
    }
    Image out(in.height(), in.width(), 3);
    for (int y = 0; y < in.height(); ++y) {
        for (int x = 0; x < in.width(); ++x) {
            for (int c = 0; c < 3; ++c) {
                out.at(y, x, c) = in.at(y, x, in.channels() == 1 ? 0 : c);
            }
        }
    }
    return out;
}

Image load_image(const fs::path& path)
{
    require_input(path, "image");
    return read_png(path);
}

Image drop_rows(const Image& in, int rows)
{
    if (rows == 0) {
        return in;
    }
    if (rows < 0 || rows >= in.height()) {
        throw ValidationError("cannot crop " + std::to_string(rows) + " rows from a " + in.geometry().str() + " image");
    }
    Image out(in.height() - rows, in.width(), in.channels());
    const auto stride = static_cast<std::size_t>(in.width()) * in.channels();
    for (int y = 0; y < out.height(); ++y) {
        std::copy_n(in.row(y + rows), stride, out.row(y));
    }
    return out;
}

fs::path relative_to(const fs::path& target, const fs::path& base)
{
    return fs::proximate(fs::absolute(target).lexically_normal(), fs::absolute(base).lexically_normal());
}

std::string sequence_name(const Recording& r)
{
    if (!r.name.empty()) {
        return r.name;
    }
    const fs::path parent = fs::absolute(r.manifest).lexically_normal().parent_path();
    return parent.filename().string();
}

std::string frame_id(const std::string& seq, std::size_t frame_index)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%06zu", frame_index);
    return seq + "/" + buf;
}

Json report_json(const IngestReport& r)
{
    return {{"accepted", r.accepted},
            {"discarded_out_of_frame", r.discarded_out_of_frame},
            {"discarded_invalid", r.discarded_invalid},
            {"discarded_degenerate", r.discarded_degenerate},
            {"discarded_above_crop", r.discarded_above_crop}};
}

} // namespace

void require_input(const fs::path& path, const std::string& what)
{
    std::error_code ec;
    if (!fs::is_regular_file(path, ec)) {
        throw ValidationError("missing " + what + ": expected file " + path.string());
    }
}

std::vector<IndexEntry> read_index(const fs::path& path)
{
    require_input(path, "sample index");
    auto in = open_input(path);
    const fs::path base = path.parent_path();
    return with_file(path, [&] {
        std::vector<IndexEntry> entries;
        std::string line;
        std::size_t n = 0;
        while (std::getline(in, line)) {
            ++n;
            if (line.find_first_not_of(" \t\r") == std::string::npos) {
                continue;
            }
            try {
                const Json j = Json::parse(line);
                IndexEntry e;
                e.id = j.at("id").get<std::string>();
                e.image = base / j.at("image").get<std::string>();
                e.crop_rows = j.value("crop_rows", 0);
                if (j.contains("attention")) {
                    e.attention = base / j.at("attention").get<std::string>();
                }
                if (j.contains("frame_index")) {
                    e.frame_index = j.at("frame_index").get<std::size_t>();
                }
                if (j.contains("t_ns")) {
                    e.t_ns = j.at("t_ns").get<std::int64_t>();
                }
                for (const Json& p : j.value("points", Json::array())) {
                    e.points.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
                }
                entries.push_back(std::move(e));
            } catch (const Json::exception& e) {
                throw ParseError(n, std::string("bad index line: ") + e.what());
            }
        }
        return entries;
    });
}

void write_index(const fs::path& path, const std::vector<IndexEntry>& entries)
{
    const fs::path base = path.parent_path().empty() ? fs::path(".") : path.parent_path();
    std::ostringstream text;
    for (const IndexEntry& e : entries) {
        Json j;
        j["id"] = e.id;
        j["image"] = relative_to(e.image, base).generic_string();
        j["crop_rows"] = e.crop_rows;
        if (!e.attention.empty()) {
            j["attention"] = relative_to(e.attention, base).generic_string();
        }
        if (e.frame_index) {
            j["frame_index"] = *e.frame_index;
        }
        if (e.t_ns) {
            j["t_ns"] = *e.t_ns;
        }
        j["points"] = Json::array();
        for (const Point2& p : e.points) {
            j["points"].push_back({p.x, p.y});
        }
        text << j.dump() << '\n';
    }
    write_text(path, text.str());
}

Sample load_sample(const IndexEntry& entry, const std::vector<BoxAnnotation>& boxes)
{
    Sample s;
    s.id = entry.id;
    s.image = to_rgb(drop_rows(load_image(entry.image), entry.crop_rows));
    if (!entry.attention.empty()) {
        Image att = load_image(entry.attention);
        if (att.channels() != 1) {
            throw ValidationError("attention map " + entry.attention.string() + " must be single-channel");
        }
        s.attention = std::move(att);
    }
    s.points = FocusPointSet{entry.frame_index.value_or(0), entry.points};
    for (const BoxAnnotation& b : boxes) {
        if (b.image_id == entry.id) {
            s.boxes.push_back(b);
        }
    }
    s.validate();
    return s;
}

BuildSummary cmd_build(const PipelineConfig& cfg, const std::vector<Recording>& recordings, const fs::path& out)
{
    if (recordings.empty()) {
        throw ValidationError("build needs at least one gaze/manifest pair");
    }
    std::vector<std::string> names;
    std::set<std::string> unique;
    for (const Recording& r : recordings) {
        names.push_back(sequence_name(r));
        if (!unique.insert(names.back()).second) {
            throw ValidationError("duplicate sequence name '" + names.back() + "'; name recordings explicitly");
        }
    }
    make_dirs(out);

    struct Built {
        IngestReport report;
        std::vector<IndexEntry> entries;
    };
    std::vector<Built> built(recordings.size());
    kernels::parallel_for(static_cast<std::ptrdiff_t>(recordings.size()), [&](std::ptrdiff_t i) {
        const Recording& rec = recordings[i];
        const std::vector<GazeSample> gaze = load_gaze(rec.gaze);
        const std::vector<FrameManifestEntry> manifest = load_manifest(rec.manifest);
        const IngestResult ingest = with_file(rec.manifest, [&] { return ingest_recording(gaze, manifest, cfg.ingest); });
        const std::vector<AttentionMap> maps = aggregate_sequence(ingest.point_sets, ingest.geometry, cfg.decay);
        const fs::path seq_dir = out / names[i];
        make_dirs(seq_dir);
        const fs::path manifest_dir = rec.manifest.parent_path();
        const int crop = cfg.ingest.crop_upper_third && !manifest.empty() ? cropped_rows(manifest.front().height) : 0;
        Built& b = built[i];
        b.report = ingest.report;
        for (std::size_t f = 0; f < maps.size(); ++f) {
            const fs::path png = frame_png_path(seq_dir, manifest[f].frame_index);
            write_png(png, quantize(maps[f]));
            IndexEntry e;
            e.id = frame_id(names[i], manifest[f].frame_index);
            e.image = manifest_dir / manifest[f].path;
            e.crop_rows = crop;
            e.attention = png;
            e.frame_index = manifest[f].frame_index;
            e.t_ns = manifest[f].t_ns;
            e.points = ingest.point_sets[f].points;
            b.entries.push_back(std::move(e));
        }
        spdlog::debug("built {} frames for sequence {}", maps.size(), names[i]);
    });

    BuildSummary summary;
    std::vector<IndexEntry> index;
    Json report = Json::object();
    Json per_sequence = Json::object();
    for (std::size_t i = 0; i < built.size(); ++i) {
        summary.total += built[i].report;
        summary.sequences[names[i]] = built[i].report;
        summary.frames += built[i].entries.size();
        per_sequence[names[i]] = report_json(built[i].report);
        index.insert(index.end(), built[i].entries.begin(), built[i].entries.end());
    }
    report = report_json(summary.total);
    report["frames"] = summary.frames;
    report["sequences"] = per_sequence;
    report["config_hash"] = config_hash(cfg);
    write_index(out / "index.jsonl", index);
    write_text(out / "report.json", report.dump(2) + "\n");
    spdlog::info("build: {} frames, {} points accepted", summary.frames, summary.total.accepted);
    return summary;
}

void cmd_augment(const PipelineConfig& cfg, const fs::path& index, const std::optional<fs::path>& boxes,
                 const fs::path& out)
{
    const std::vector<IndexEntry> entries = read_index(index);
    const std::vector<BoxAnnotation> annotations = boxes ? load_boxes(*boxes) : std::vector<BoxAnnotation>{};
    std::vector<Sample> samples(entries.size());
    kernels::parallel_for(static_cast<std::ptrdiff_t>(entries.size()),
                          [&](std::ptrdiff_t i) { samples[i] = load_sample(entries[i], annotations); });

    const AugmentSpec spec{cfg.augment, derive_seed(cfg.seed, "augment")};
    const std::vector<Sample> augmented = augment_batch(samples, spec);

    make_dirs(out);
    std::vector<IndexEntry> out_entries(augmented.size());
    std::vector<BoxAnnotation> out_boxes;
    for (const Sample& s : augmented) {
        out_boxes.insert(out_boxes.end(), s.boxes.begin(), s.boxes.end());
    }
    kernels::parallel_for(static_cast<std::ptrdiff_t>(augmented.size()), [&](std::ptrdiff_t i) {
        const Sample& s = augmented[i];
        IndexEntry& e = out_entries[i];
        e.id = s.id;
        e.image = out / (s.id + ".png");
        make_dirs(e.image.parent_path());
        write_png(e.image, s.image);
        if (s.attention) {
            e.attention = out / (s.id + ".att.png");
            write_png(e.attention, *s.attention);
        }
        e.frame_index = entries[i].frame_index;
        e.t_ns = entries[i].t_ns;
        if (s.points) {
            e.points = s.points->points;
        }
    });
    write_index(out / "index.jsonl", out_entries);
    auto box_out = open_output(out / "boxes.jsonl");
    write_boxes(box_out, out_boxes);
    spdlog::info("augment: {} samples", augmented.size());
}

void cmd_fuse(const PipelineConfig& cfg, const fs::path& index, const std::optional<fs::path>& commands,
              const std::optional<fs::path>& boxes, const fs::path& out)
{
    const std::vector<IndexEntry> entries = read_index(index);
    std::map<std::string, Command> labels;
    if (commands) {
        require_input(*commands, "commands");
        auto in = open_input(*commands);
        std::string line;
        std::size_t n = 0;
        with_file(*commands, [&] {
            while (std::getline(in, line)) {
                ++n;
                if (line.find_first_not_of(" \t\r") == std::string::npos) {
                    continue;
                }
                try {
                    const Json j = Json::parse(line);
                    labels[j.at("id").get<std::string>()] = {j.at("steering").get<double>(),
                                                             j.at("velocity").get<double>()};
                } catch (const Json::exception& e) {
                    throw ParseError(n, std::string("bad command line: ") + e.what());
                }
            }
            return 0;
        });
        for (const IndexEntry& e : entries) {
            if (!labels.contains(e.id)) {
                throw ValidationError(commands->string() + ": no command for sample " + e.id);
            }
        }
    }
    if (boxes) {
        require_input(*boxes, "box annotations");
    }
    make_dirs(out);
    const bool channel = cfg.fusion.mode == FusionMode::channel;
    std::vector<fs::path> written(entries.size());
    kernels::parallel_for(static_cast<std::ptrdiff_t>(entries.size()), [&](std::ptrdiff_t i) {
        const IndexEntry& e = entries[i];
        const Image rgb = to_rgb(drop_rows(load_image(e.image), e.crop_rows));
        FusedSample fused;
        if (channel) {
            if (e.attention.empty()) {
                throw ValidationError("sample " + e.id + " has no attention map for channel fusion");
            }
            fused = fuse_channel(rgb, load_image(e.attention));
        } else {
            fused = mark_points(rgb, FocusPointSet{e.frame_index.value_or(0), e.points}, cfg.fusion.mark);
        }
        written[i] = out / (e.id + ".png");
        make_dirs(written[i].parent_path());
        write_png(written[i], fused.pixels);
    });
    std::ostringstream dataset;
    for (std::size_t i = 0; i < entries.size(); ++i) {
        Json j;
        j["path"] = relative_to(written[i], out).generic_string();
        j["mode"] = channel ? "channel" : "marked";
        if (commands) {
            const Command& c = labels.at(entries[i].id);
            j["steering"] = c.steering;
            j["velocity"] = c.velocity;
        }
        if (boxes) {
            j["boxes_ref"] = relative_to(*boxes, out).generic_string();
        }
        dataset << j.dump() << '\n';
    }
    write_text(out / "dataset.jsonl", dataset.str());
    spdlog::info("fuse: {} samples ({})", entries.size(), channel ? "channel" : "marked");
}

namespace {

/// Images scaled to [0, 1] with their attention targets.
RestorationDataset load_restoration(const std::vector<IndexEntry>& entries, int channels)
{
    if (entries.empty()) {
        throw ValidationError("sample index is empty");
    }
    std::vector<Sample> samples(entries.size());
    kernels::parallel_for(static_cast<std::ptrdiff_t>(entries.size()),
                          [&](std::ptrdiff_t i) { samples[i] = load_sample(entries[i], {}); });
    const Geometry g = samples.front().image.geometry();
    const int n = static_cast<int>(samples.size());
    RestorationDataset data{nn::Tensor(n, channels, g.height, g.width), nn::Tensor(n, 1, g.height, g.width)};
    for (int b = 0; b < n; ++b) {
        const Sample& s = samples[b];
        if (s.image.geometry() != g) {
            throw ValidationError("sample " + s.id + " is " + s.image.geometry().str() + ", expected " + g.str());
        }
        if (!s.attention) {
            throw ValidationError("sample " + s.id + " has no attention map");
        }
        for (int y = 0; y < g.height; ++y) {
            for (int x = 0; x < g.width; ++x) {
                if (channels == 3) {
                    for (int c = 0; c < 3; ++c) {
                        data.images.at(b, c, y, x) = s.image.at(y, x, c) / 255.0;
                    }
                } else {
                    data.images.at(b, 0, y, x) =
                            (s.image.at(y, x, 0) + s.image.at(y, x, 1) + s.image.at(y, x, 2)) / (3.0 * 255.0);
                }
                data.targets.at(b, 0, y, x) = s.attention->at(y, x) / 255.0;
            }
        }
    }
    return data;
}

} // namespace

TrainResult cmd_train(const PipelineConfig& cfg, const fs::path& index, const fs::path& out)
{
    const RestorationDataset data = load_restoration(read_index(index), cfg.train.net.input_channels);
    AttentionNet probe(cfg.train.net);
    probe.check_input(data.images);
    TrainResult result = train(data, cfg.train, derive_seed(cfg.seed, "train"));
    make_dirs(out);
    save_checkpoint(out / "checkpoint.tnet", result.net);
    auto log = open_output(out / "train_log.csv");
    write_training_log(log, result.log);
    if (!result.log.empty()) {
        spdlog::info("train: {} epochs, loss {} -> {}", result.log.size(), result.log.front().loss,
                     result.log.back().loss);
    }
    return result;
}

double cmd_eval_map(const fs::path& detections, const fs::path& ground_truth)
{
    const std::vector<Detection> dets = load_detections(detections);
    const std::vector<BoxAnnotation> gts = load_boxes(ground_truth);
    return map_coco(dets, gts);
}

AttentionScore cmd_eval_att(const PipelineConfig& cfg, const fs::path& checkpoint, const fs::path& index)
{
    require_input(checkpoint, "checkpoint");
    const AttentionNet net = load_checkpoint(checkpoint);
    const RestorationDataset data = load_restoration(read_index(index), net.config().input_channels);
    net.check_input(data.images);
    const nn::Tensor pred = net.forward(data.images);
    return {nn::smooth_l1(pred, data.targets, cfg.train.loss.beta), nn::mse(pred, data.targets), data.size()};
}

double cmd_eval_mse(const fs::path& predicted, const fs::path& target)
{
    const std::vector<Command> p = load_commands(predicted);
    const std::vector<Command> t = load_commands(target);
    return command_mse(p, t);
}

EvalReport cmd_sweep_brightness(const PipelineConfig& cfg, const fs::path& ground_truth, const fs::path& preds,
                                const std::optional<fs::path>& index, const fs::path& out)
{
    const std::vector<BoxAnnotation> gts = load_boxes(ground_truth);
    const auto& factors = cfg.eval.factors;
    make_dirs(out);
    if (index) {
        const std::vector<IndexEntry> entries = read_index(*index);
        std::vector<Sample> samples(entries.size());
        kernels::parallel_for(static_cast<std::ptrdiff_t>(entries.size()),
                              [&](std::ptrdiff_t i) { samples[i] = load_sample(entries[i], gts); });
        const auto sets = make_brightness_sets(samples, factors);
        for (std::size_t f = 0; f < factors.size(); ++f) {
            const fs::path dir = out / "sets" / factor_label(factors[f]);
            kernels::parallel_for(static_cast<std::ptrdiff_t>(sets[f].size()), [&](std::ptrdiff_t i) {
                const fs::path p = dir / (sets[f][i].id + ".png");
                make_dirs(p.parent_path());
                write_png(p, sets[f][i].image);
            });
        }
    }
    std::vector<std::string> missing;
    std::map<std::string, std::vector<Detection>> predictions;
    for (double f : factors) {
        const fs::path p = preds / (factor_label(f) + ".jsonl");
        if (!fs::is_regular_file(p)) {
            missing.push_back(p.string());
            continue;
        }
        predictions[factor_label(f)] = load_detections(p);
    }
    if (!missing.empty()) {
        std::string msg = "missing prediction files:";
        for (const std::string& m : missing) {
            msg += " " + m;
        }
        throw ValidationError(msg);
    }
    EvalReport report = brightness_sweep(gts, predictions, factors);
    report.config_hash = config_hash(cfg);
    report.counts["ground_truth"] = gts.size();
    for (const auto& [label, dets] : predictions) {
        report.counts["detections@" + label] = dets.size();
    }
    write_text(out / "brightness.csv", report.to_csv());
    write_text(out / "brightness.json", report.to_json() + "\n");
    return report;
}

EvalReport cmd_sweep_budget(const PipelineConfig& cfg, const fs::path& out)
{
    const BudgetExperiment experiment = cfg.budget_experiment();
    const std::uint64_t seed = derive_seed(cfg.seed, "budget");
    EvalReport report;
    report.metric = "mse";
    report.config_hash = config_hash(cfg);
    for (const bool marked : {true, false}) {
        const EvalReport r = synthetic_budget_sweep(experiment, marked, seed);
        for (ReportRow row : r.rows) {
            row.condition = (marked ? "marked@" : "unmarked@") + row.condition;
            report.counts["samples@" + row.condition] = row.count;
            report.rows.push_back(row);
        }
        spdlog::info("budget sweep ({}) done", marked ? "marked" : "unmarked");
    }
    make_dirs(out);
    write_text(out / "budget.csv", report.to_csv());
    write_text(out / "budget.json", report.to_json() + "\n");
    return report;
}

std::string format_double(double v)
{
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    std::string s(buf, res.ptr);
    if (std::isfinite(v) && s.find_first_of(".e") == std::string::npos) {
        s += ".0";
    }
    return s;
}

} // namespace attn
