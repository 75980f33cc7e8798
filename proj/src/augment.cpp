#include "attn/augment.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "attn/errors.hpp"
#include "attn/kernels.hpp"
#include "attn/random.hpp"

namespace attn {

void Sample::validate() const
{
    if (image.channels() != 3) {
        throw ValidationError("sample " + id + ": image must have 3 channels, got " + std::to_string(image.channels()));
    }
    const Geometry g = image.geometry();
    if (attention) {
        if (attention->channels() != 1 || attention->geometry() != g) {
            throw ValidationError("sample " + id + ": attention " + attention->geometry().str() + "x"
                                  + std::to_string(attention->channels()) + " does not match image " + g.str());
        }
    }
    if (points) {
        validate_points(*points, g, points->points.size());
    }
    for (const BoxAnnotation& b : boxes) {
        if (!(b.box.w > 0 && b.box.h > 0) || b.box.x < 0 || b.box.y < 0 || b.box.x + b.box.w > g.width
            || b.box.y + b.box.h > g.height) {
            throw ValidationError("sample " + id + ": box outside image " + g.str());
        }
    }
}

namespace {

Image flip_image(const Image& in)
{
    Image out(in.height(), in.width(), in.channels());
    const int w = in.width();
    const int c = in.channels();
#pragma omp parallel for schedule(static)
    for (int y = 0; y < in.height(); ++y) {
        const std::uint8_t* src = in.row(y);
        std::uint8_t* dst = out.row(y);
        for (int x = 0; x < w; ++x) {
            std::copy_n(src + static_cast<std::size_t>(w - 1 - x) * c, c, dst + static_cast<std::size_t>(x) * c);
        }
    }
    return out;
}

// Clips to [x0, x1] x [y0, y1]; nullopt when the remainder is degenerate or too small.
std::optional<Box> clip_box(Box b, double x0, double y0, double x1, double y1)
{
    const double l = std::max(b.x, x0);
    const double t = std::max(b.y, y0);
    const double r = std::min(b.x + b.w, x1);
    const double btm = std::min(b.y + b.h, y1);
    Box out{l, t, r - l, btm - t};
    if (!(out.w > 0.0 && out.h > 0.0) || out.area() < kMinBoxArea) {
        return std::nullopt;
    }
    return out;
}

} // namespace

Sample flip_h(const Sample& s)
{
    const int w = s.image.width();
    Sample out;
    out.id = s.id;
    out.image = flip_image(s.image);
    if (s.attention) {
        out.attention = flip_image(*s.attention);
    }
    if (s.points) {
        FocusPointSet p = *s.points;
        for (Point2& q : p.points) {
            q.x = (w - 1) - q.x;
        }
        out.points = std::move(p);
    }
    out.boxes = s.boxes;
    for (BoxAnnotation& b : out.boxes) {
        b.box.x = w - b.box.x - b.box.w;
    }
    return out;
}

Sample brightness(const Sample& s, double factor)
{
    if (!(factor >= 0.1 && factor <= 3.0)) {
        throw ValidationError("brightness factor must lie in [0.1, 3.0], got " + std::to_string(factor));
    }
    Sample out = s;
    kernels::parallel::scale_u8(s.image.samples(), factor, out.image.samples());
    return out;
}

namespace {

struct Hsv {
    double h; // degrees [0, 360)
    double s;
    double v;
};

Hsv rgb_to_hsv(double r, double g, double b)
{
    const double mx = std::max({r, g, b});
    const double mn = std::min({r, g, b});
    const double delta = mx - mn;
    Hsv out{0.0, mx > 0.0 ? delta / mx : 0.0, mx};
    if (delta > 0.0) {
        double h;
        if (mx == r) {
            h = (g - b) / delta;
        } else if (mx == g) {
            h = 2.0 + (b - r) / delta;
        } else {
            h = 4.0 + (r - g) / delta;
        }
        h *= 60.0;
        if (h < 0.0) {
            h += 360.0;
        }
        out.h = h;
    }
    return out;
}

void hsv_to_rgb(Hsv c, double& r, double& g, double& b)
{
    if (c.s <= 0.0) {
        r = g = b = c.v;
        return;
    }
    const double hh = c.h / 60.0;
    const int sector = static_cast<int>(std::floor(hh)) % 6;
    const double f = hh - std::floor(hh);
    const double p = c.v * (1.0 - c.s);
    const double q = c.v * (1.0 - c.s * f);
    const double t = c.v * (1.0 - c.s * (1.0 - f));
    switch (sector) {
    case 0: r = c.v, g = t, b = p; break;
    case 1: r = q, g = c.v, b = p; break;
    case 2: r = p, g = c.v, b = t; break;
    case 3: r = p, g = q, b = c.v; break;
    case 4: r = t, g = p, b = c.v; break;
    default: r = c.v, g = p, b = q; break;
    }
}

std::uint8_t to_u8(double unit)
{
    return static_cast<std::uint8_t>(std::clamp(std::lround(unit * 255.0), 0L, 255L));
}

} // namespace

Sample hsv_jitter(const Sample& s, const HsvJitter& magnitudes, std::uint64_t seed)
{
    if (s.image.channels() != 3) {
        throw ValidationError("hsv_jitter needs a 3-channel image");
    }
    if (magnitudes.hue_deg < 0 || magnitudes.saturation < 0 || magnitudes.value < 0) {
        throw ValidationError("hsv jitter magnitudes must be non-negative");
    }
    Rng rng(seed);
    const double hue_shift = rng.uniform(-1.0, 1.0) * magnitudes.hue_deg;
    const double sat_gain = 1.0 + rng.uniform(-1.0, 1.0) * magnitudes.saturation;
    const double val_gain = 1.0 + rng.uniform(-1.0, 1.0) * magnitudes.value;

    Sample out = s;
    const int w = s.image.width();
#pragma omp parallel for schedule(static)
    for (int y = 0; y < s.image.height(); ++y) {
        const std::uint8_t* src = s.image.row(y);
        std::uint8_t* dst = out.image.row(y);
        for (int x = 0; x < w; ++x) {
            const std::uint8_t* px = src + 3 * x;
            Hsv c = rgb_to_hsv(px[0] / 255.0, px[1] / 255.0, px[2] / 255.0);
            c.h = std::fmod(c.h + hue_shift, 360.0);
            if (c.h < 0.0) {
                c.h += 360.0;
            }
            c.s = std::clamp(c.s * sat_gain, 0.0, 1.0);
            c.v = std::clamp(c.v * val_gain, 0.0, 1.0);
            double r, g, b;
            hsv_to_rgb(c, r, g, b);
            dst[3 * x] = to_u8(r);
            dst[3 * x + 1] = to_u8(g);
            dst[3 * x + 2] = to_u8(b);
        }
    }
    return out;
}

Sample translate_scale(const Sample& s, double fx, double fy, double scale)
{
    if (std::abs(fx) > 0.5 || std::abs(fy) > 0.5) {
        throw ValidationError("translation fractions must satisfy |f| <= 0.5");
    }
    if (!(scale > 0.0)) {
        throw ValidationError("scale must be positive, got " + std::to_string(scale));
    }
    const int W = s.image.width();
    const int H = s.image.height();
    const int C = s.image.channels();
    const double cx = W / 2.0;
    const double cy = H / 2.0;
    const double tx = fx * W;
    const double ty = fy * H;
    // Edge coordinates: pixel c spans [c, c+1); forward map X' = (X - cx) * s + cx + tx.
    auto inverse_x = [&](double X) { return (X - cx - tx) / scale + cx; };
    auto inverse_y = [&](double Y) { return (Y - cy - ty) / scale + cy; };

    Sample out;
    out.id = s.id;
    out.image = Image(H, W, C, kFillGray);
#pragma omp parallel for schedule(static)
    for (int r = 0; r < H; ++r) {
        const double Y = inverse_y(r + 0.5);
        std::uint8_t* dst = out.image.row(r);
        for (int c = 0; c < W; ++c) {
            const double X = inverse_x(c + 0.5);
            if (X < 0.0 || X >= W || Y < 0.0 || Y >= H) {
                continue;
            }
            const double u = X - 0.5;
            const double v = Y - 0.5;
            const int u0 = static_cast<int>(std::floor(u));
            const int v0 = static_cast<int>(std::floor(v));
            const double au = u - u0;
            const double av = v - v0;
            const int x0 = std::clamp(u0, 0, W - 1);
            const int x1 = std::clamp(u0 + 1, 0, W - 1);
            const int y0 = std::clamp(v0, 0, H - 1);
            const int y1 = std::clamp(v0 + 1, 0, H - 1);
            for (int ch = 0; ch < C; ++ch) {
                const double top = (1.0 - au) * s.image.at(y0, x0, ch) + au * s.image.at(y0, x1, ch);
                const double bottom = (1.0 - au) * s.image.at(y1, x0, ch) + au * s.image.at(y1, x1, ch);
                const double val = (1.0 - av) * top + av * bottom;
                dst[c * C + ch] = static_cast<std::uint8_t>(std::clamp(std::lround(val), 0L, 255L));
            }
        }
    }
    if (s.attention) {
        Image att(H, W, 1, 0);
#pragma omp parallel for schedule(static)
        for (int r = 0; r < H; ++r) {
            const double Y = inverse_y(r + 0.5);
            for (int c = 0; c < W; ++c) {
                const double X = inverse_x(c + 0.5);
                if (X < 0.0 || X >= W || Y < 0.0 || Y >= H) {
                    continue;
                }
                att.at(r, c) = s.attention->at(static_cast<int>(std::floor(Y)), static_cast<int>(std::floor(X)));
            }
        }
        out.attention = std::move(att);
    }
    if (s.points) {
        FocusPointSet p;
        p.frame_index = s.points->frame_index;
        for (const Point2& q : s.points->points) {
            const double x = (q.x + 0.5 - cx) * scale + cx + tx - 0.5;
            const double y = (q.y + 0.5 - cy) * scale + cy + ty - 0.5;
            if (out.image.geometry().contains(x, y)) {
                p.points.push_back({x, y});
            }
        }
        out.points = std::move(p);
    }
    for (const BoxAnnotation& b : s.boxes) {
        Box mapped{(b.box.x - cx) * scale + cx + tx, (b.box.y - cy) * scale + cy + ty, b.box.w * scale,
                   b.box.h * scale};
        if (auto clipped = clip_box(mapped, 0.0, 0.0, W, H)) {
            out.boxes.push_back({b.image_id, b.class_id, *clipped});
        }
    }
    return out;
}

namespace {

Sample shrink_half(const Sample& s)
{
    const int W = s.image.width() / 2;
    const int H = s.image.height() / 2;
    const int C = s.image.channels();
    Sample out;
    out.id = s.id;
    out.image = Image(H, W, C);
#pragma omp parallel for schedule(static)
    for (int r = 0; r < H; ++r) {
        for (int c = 0; c < W; ++c) {
            for (int ch = 0; ch < C; ++ch) {
                const int sum = s.image.at(2 * r, 2 * c, ch) + s.image.at(2 * r, 2 * c + 1, ch)
                        + s.image.at(2 * r + 1, 2 * c, ch) + s.image.at(2 * r + 1, 2 * c + 1, ch);
                out.image.at(r, c, ch) = static_cast<std::uint8_t>(std::lround(sum / 4.0));
            }
        }
    }
    if (s.attention) {
        Image att(H, W, 1);
        for (int r = 0; r < H; ++r) {
            for (int c = 0; c < W; ++c) {
                att.at(r, c) = s.attention->at(2 * r + 1, 2 * c + 1);
            }
        }
        out.attention = std::move(att);
    }
    if (s.points) {
        FocusPointSet p;
        p.frame_index = s.points->frame_index;
        for (const Point2& q : s.points->points) {
            const Point2 m{(q.x + 0.5) / 2.0 - 0.5, (q.y + 0.5) / 2.0 - 0.5};
            if (out.image.geometry().contains(m.x, m.y)) {
                p.points.push_back(m);
            }
        }
        out.points = std::move(p);
    }
    for (const BoxAnnotation& b : s.boxes) {
        if (auto clipped = clip_box({b.box.x / 2, b.box.y / 2, b.box.w / 2, b.box.h / 2}, 0, 0, W, H)) {
            out.boxes.push_back({b.image_id, b.class_id, *clipped});
        }
    }
    return out;
}

} // namespace

Sample mosaic(std::span<const Sample, 4> samples, std::uint64_t seed, const MosaicOptions& options)
{
    const Geometry g = samples[0].image.geometry();
    const bool with_attention = samples[0].attention.has_value();
    bool with_points = false;
    for (const Sample& s : samples) {
        if (s.image.geometry() != g || s.image.channels() != 3) {
            throw ValidationError("mosaic inputs must share geometry: " + g.str() + " vs " + s.image.geometry().str());
        }
        if (s.attention.has_value() != with_attention) {
            throw ValidationError("mosaic inputs must all carry an attention channel or none");
        }
        with_points = with_points || s.points.has_value();
    }
    const int W = g.width;
    const int H = g.height;
    int cx;
    int cy;
    if (options.center) {
        cx = (*options.center)[0];
        cy = (*options.center)[1];
        if (cx < 0 || cx > 2 * W || cy < 0 || cy > 2 * H) {
            throw ValidationError("mosaic centre outside the 2W x 2H canvas");
        }
    } else {
        Rng rng(seed);
        cx = static_cast<int>(rng.uniform_int(W / 2, (3 * W) / 2));
        cy = static_cast<int>(rng.uniform_int(H / 2, (3 * H) / 2));
    }

    Sample out;
    out.id = samples[0].id;
    out.image = Image(2 * H, 2 * W, 3, kFillGray);
    if (with_attention) {
        out.attention = Image(2 * H, 2 * W, 1, 0);
    }
    if (with_points) {
        out.points = FocusPointSet{samples[0].points ? samples[0].points->frame_index : 0, {}};
    }
    for (int k = 0; k < 4; ++k) {
        // Canvas region [xa0, xa1) x [ya0, ya1) receives source region starting at (xb0, yb0).
        int xa0, ya0, xa1, ya1, xb0, yb0;
        switch (k) {
        case 0:
            xa0 = std::max(cx - W, 0), ya0 = std::max(cy - H, 0), xa1 = cx, ya1 = cy;
            xb0 = W - (xa1 - xa0), yb0 = H - (ya1 - ya0);
            break;
        case 1:
            xa0 = cx, ya0 = std::max(cy - H, 0), xa1 = std::min(cx + W, 2 * W), ya1 = cy;
            xb0 = 0, yb0 = H - (ya1 - ya0);
            break;
        case 2:
            xa0 = std::max(cx - W, 0), ya0 = cy, xa1 = cx, ya1 = std::min(cy + H, 2 * H);
            xb0 = W - (xa1 - xa0), yb0 = 0;
            break;
        default:
            xa0 = cx, ya0 = cy, xa1 = std::min(cx + W, 2 * W), ya1 = std::min(cy + H, 2 * H);
            xb0 = 0, yb0 = 0;
            break;
        }
        const int cols = xa1 - xa0;
        const int rows = ya1 - ya0;
        if (cols <= 0 || rows <= 0) {
            continue;
        }
        const Sample& s = samples[k];
#pragma omp parallel for schedule(static)
        for (int r = 0; r < rows; ++r) {
            std::copy_n(s.image.row(yb0 + r) + 3 * xb0, 3 * cols, out.image.row(ya0 + r) + 3 * xa0);
            if (with_attention) {
                std::copy_n(s.attention->row(yb0 + r) + xb0, cols, out.attention->row(ya0 + r) + xa0);
            }
        }
        const int dx = xa0 - xb0;
        const int dy = ya0 - yb0;
        if (s.points) {
            for (const Point2& q : s.points->points) {
                const double ex = q.x + 0.5 + dx;
                const double ey = q.y + 0.5 + dy;
                if (ex >= xa0 && ex < xa1 && ey >= ya0 && ey < ya1) {
                    out.points->points.push_back({ex - 0.5, ey - 0.5});
                }
            }
        }
        for (const BoxAnnotation& b : s.boxes) {
            const Box shifted{b.box.x + dx, b.box.y + dy, b.box.w, b.box.h};
            if (auto clipped = clip_box(shifted, xa0, ya0, xa1, ya1)) {
                out.boxes.push_back({out.id, b.class_id, *clipped});
            }
        }
    }
    if (!options.rescale) {
        return out;
    }
    return shrink_half(out);
}

void AugmentSpec::validate() const
{
    for (const AugmentStep& step : ops) {
        if (!(step.probability >= 0.0 && step.probability <= 1.0)) {
            throw ValidationError("augment step probability must lie in [0, 1]");
        }
        if (const auto* b = std::get_if<BrightnessOp>(&step.op)) {
            if (!(b->factor >= 0.1 && b->factor <= 3.0)) {
                throw ValidationError("brightness factor must lie in [0.1, 3.0]");
            }
        } else if (const auto* t = std::get_if<TranslateOp>(&step.op)) {
            if (t->jitter < 0 || std::abs(t->fx) + t->jitter > 0.5 || std::abs(t->fy) + t->jitter > 0.5) {
                throw ValidationError("translation must satisfy |f| + jitter <= 0.5");
            }
        } else if (const auto* s = std::get_if<ScaleOp>(&step.op)) {
            if (s->jitter < 0 || !(s->s - s->jitter > 0.0)) {
                throw ValidationError("scale must satisfy s - jitter > 0");
            }
        } else if (const auto* h = std::get_if<HsvOp>(&step.op)) {
            if (h->magnitudes.hue_deg < 0 || h->magnitudes.saturation < 0 || h->magnitudes.value < 0) {
                throw ValidationError("hsv jitter magnitudes must be non-negative");
            }
        }
    }
}

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

Sample augment_one(std::span<const Sample> batch, std::size_t index, const AugmentSpec& spec)
{
    Rng rng(spec.seed ^ static_cast<std::uint64_t>(index));
    Sample current = batch[index];
    for (const AugmentStep& step : spec.ops) {
        // Draw unconditionally so later steps see the same stream whatever this one decides.
        const bool apply = rng.uniform() < step.probability;
        const std::uint64_t op_seed = rng.next();
        Rng op_rng(op_seed);
        if (!apply) {
            continue;
        }
        current = std::visit(
                overloaded{
                        [&](const FlipOp&) { return flip_h(current); },
                        [&](const BrightnessOp& op) { return brightness(current, op.factor); },
                        [&](const HsvOp& op) { return hsv_jitter(current, op.magnitudes, op_seed); },
                        [&](const TranslateOp& op) {
                            const double fx = op.fx + op_rng.uniform(-op.jitter, op.jitter);
                            const double fy = op.fy + op_rng.uniform(-op.jitter, op.jitter);
                            return translate_scale(current, fx, fy, 1.0);
                        },
                        [&](const ScaleOp& op) {
                            return translate_scale(current, 0.0, 0.0, op.s + op_rng.uniform(-op.jitter, op.jitter));
                        },
                        [&](const MosaicOp& op) {
                            std::array<Sample, 4> parts;
                            parts[0] = current;
                            for (int k = 1; k < 4; ++k) {
                                parts[k] = batch[static_cast<std::size_t>(
                                        op_rng.uniform_int(0, static_cast<std::int64_t>(batch.size()) - 1))];
                            }
                            return mosaic(std::span<const Sample, 4>(parts), op_rng.next(), {op.rescale, std::nullopt});
                        },
                },
                step.op);
    }
    return current;
}

} // namespace

std::vector<Sample> augment_batch(std::span<const Sample> samples, const AugmentSpec& spec)
{
    spec.validate();
    for (const Sample& s : samples) {
        s.validate();
    }
    std::vector<Sample> out(samples.size());
    kernels::parallel_for(static_cast<std::ptrdiff_t>(samples.size()), [&](std::ptrdiff_t i) {
        out[i] = augment_one(samples, static_cast<std::size_t>(i), spec);
    });
    return out;
}

} // namespace attn
