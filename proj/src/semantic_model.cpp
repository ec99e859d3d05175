#include "lodloc/semantic_model.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "lodloc/errors.hpp"

namespace lodloc {

const char* to_string(LoD lod) {
    switch (lod) {
        case LoD::LoD1: return "LoD1";
        case LoD::LoD2: return "LoD2";
        case LoD::LoD3: return "LoD3";
    }
    return "?";
}

const char* to_string(SurfaceSemantics s) {
    switch (s) {
        case SurfaceSemantics::Wall: return "Wall";
        case SurfaceSemantics::Roof: return "Roof";
        case SurfaceSemantics::Ground: return "Ground";
        case SurfaceSemantics::Window: return "Window";
        case SurfaceSemantics::Door: return "Door";
        case SurfaceSemantics::Other: return "Other";
    }
    return "?";
}

LoD lod_from_string(const std::string& s) {
    if (s == "LoD1") return LoD::LoD1;
    if (s == "LoD2") return LoD::LoD2;
    if (s == "LoD3") return LoD::LoD3;
    throw ParseError("unknown LoD tag '" + s + "'");
}

SurfaceSemantics semantics_from_string(const std::string& s) {
    if (s == "Wall") return SurfaceSemantics::Wall;
    if (s == "Roof") return SurfaceSemantics::Roof;
    if (s == "Ground") return SurfaceSemantics::Ground;
    if (s == "Window") return SurfaceSemantics::Window;
    if (s == "Door") return SurfaceSemantics::Door;
    if (s == "Other") return SurfaceSemantics::Other;
    throw ParseError("unknown surface semantics '" + s + "'");
}

RingPlane ring_plane(const std::vector<Eigen::Vector3d>& ring) {
    if (ring.size() < 3) {
        throw ValidationError("ring has fewer than 3 points");
    }
    // Newell's method; robust for slightly non-planar rings.
    Eigen::Vector3d n = Eigen::Vector3d::Zero();
    Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
    for (size_t i = 0; i < ring.size(); ++i) {
        const Eigen::Vector3d& a = ring[i];
        const Eigen::Vector3d& b = ring[(i + 1) % ring.size()];
        n.x() += (a.y() - b.y()) * (a.z() + b.z());
        n.y() += (a.z() - b.z()) * (a.x() + b.x());
        n.z() += (a.x() - b.x()) * (a.y() + b.y());
        centroid += a;
    }
    const double len = n.norm();
    if (len < 1e-12) {
        throw ValidationError("ring is degenerate (collinear or zero area)");
    }
    return {n / len, centroid / static_cast<double>(ring.size())};
}

namespace {

void validate_ring(const std::vector<Eigen::Vector3d>& ring, const RingPlane& plane,
                   const std::string& where) {
    if (ring.size() < 3) {
        throw ValidationError(where + ": ring has fewer than 3 points");
    }
    for (const auto& p : ring) {
        if (!p.allFinite()) {
            throw ValidationError(where + ": non-finite coordinate");
        }
    }
    for (const auto& p : ring) {
        const double d = std::abs((p - plane.point).dot(plane.normal));
        if (d > kPlaneTolerance) {
            std::ostringstream os;
            os << where << ": ring is non-planar (point-to-plane distance " << d
               << " m exceeds " << kPlaneTolerance << " m)";
            throw ValidationError(os.str());
        }
    }
}

}  // namespace

void validate_model(const SemanticModel& model) {
    std::set<std::string> ids;
    for (const auto& b : model.buildings) {
        if (b.id.empty()) {
            throw ValidationError("building with empty id");
        }
        if (!ids.insert(b.id).second) {
            throw ValidationError("duplicate building id '" + b.id + "'");
        }
        if (b.surfaces.size() < 4) {
            throw ValidationError("building '" + b.id + "' has " +
                                  std::to_string(b.surfaces.size()) +
                                  " surfaces, at least 4 required");
        }
        for (size_t si = 0; si < b.surfaces.size(); ++si) {
            const Surface& s = b.surfaces[si];
            const std::string where =
                "building '" + b.id + "' surface " + std::to_string(si);
            RingPlane plane;
            try {
                plane = ring_plane(s.outer_ring);
            } catch (const ValidationError& e) {
                throw ValidationError(where + ": " + e.what());
            }
            validate_ring(s.outer_ring, plane, where);
            for (size_t ri = 0; ri < s.inner_rings.size(); ++ri) {
                validate_ring(s.inner_rings[ri], plane,
                              where + " inner ring " + std::to_string(ri));
            }
        }
    }
}

namespace {

struct Line {
    int number;
    std::vector<std::string> tokens;
};

std::vector<Line> tokenize(std::istream& in) {
    std::vector<Line> lines;
    std::string raw;
    int number = 0;
    while (std::getline(in, raw)) {
        ++number;
        const size_t hash = raw.find('#');
        if (hash != std::string::npos) raw.erase(hash);
        std::istringstream ls(raw);
        Line line{number, {}};
        std::string tok;
        while (ls >> tok) line.tokens.push_back(tok);
        if (!line.tokens.empty()) lines.push_back(std::move(line));
    }
    return lines;
}

double parse_coord(const std::string& tok, int line) {
    try {
        size_t used = 0;
        const double v = std::stod(tok, &used);
        if (used != tok.size()) throw std::invalid_argument("trailing");
        return v;
    } catch (const std::exception&) {
        throw ParseError("line " + std::to_string(line) + ": bad coordinate '" + tok + "'");
    }
}

}  // namespace

SemanticModel load_model(const std::string& path, std::optional<LoD> lod) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);

    SemanticModel model;
    bool lod_in_file = false;
    Building* building = nullptr;
    Surface* surface = nullptr;
    std::vector<Eigen::Vector3d>* ring = nullptr;

    for (const Line& line : tokenize(in)) {
        const std::string& kw = line.tokens[0];
        const auto fail = [&](const std::string& msg) {
            throw ParseError(path + ":" + std::to_string(line.number) + ": " + msg);
        };
        if (kw == "lod") {
            if (line.tokens.size() != 2) fail("expected: lod <LoD1|LoD2|LoD3>");
            model.lod = lod_from_string(line.tokens[1]);
            lod_in_file = true;
        } else if (kw == "crs") {
            std::string note;
            for (size_t i = 1; i < line.tokens.size(); ++i) {
                if (i > 1) note += ' ';
                note += line.tokens[i];
            }
            model.crs_note = note;
        } else if (kw == "building") {
            if (line.tokens.size() != 2) fail("expected: building <id>");
            model.buildings.push_back(Building{line.tokens[1], {}});
            building = &model.buildings.back();
            surface = nullptr;
            ring = nullptr;
        } else if (kw == "surface") {
            if (!building) fail("surface before any building");
            if (line.tokens.size() != 2) fail("expected: surface <semantics>");
            building->surfaces.push_back(Surface{});
            surface = &building->surfaces.back();
            surface->semantics = semantics_from_string(line.tokens[1]);
            ring = nullptr;
        } else if (kw == "outer") {
            if (!surface) fail("outer before any surface");
            if (!surface->outer_ring.empty()) fail("surface already has an outer ring");
            ring = &surface->outer_ring;
        } else if (kw == "inner") {
            if (!surface) fail("inner before any surface");
            surface->inner_rings.emplace_back();
            ring = &surface->inner_rings.back();
        } else {
            // a coordinate line: "x y z"
            if (!ring) fail("coordinates outside of a ring block");
            if (line.tokens.size() != 3) fail("expected 3 coordinates per line");
            ring->emplace_back(parse_coord(line.tokens[0], line.number),
                               parse_coord(line.tokens[1], line.number),
                               parse_coord(line.tokens[2], line.number));
        }
    }

    if (lod) {
        if (lod_in_file && model.lod != *lod) {
            throw ValidationError(path + ": file declares " + to_string(model.lod) +
                                  " but " + to_string(*lod) + " was requested");
        }
        model.lod = *lod;
    }
    validate_model(model);
    return model;
}

void save_model(const SemanticModel& model, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out << "lod " << to_string(model.lod) << "\n";
    if (!model.crs_note.empty()) out << "crs " << model.crs_note << "\n";
    out.precision(17);
    for (const auto& b : model.buildings) {
        out << "\nbuilding " << b.id << "\n";
        for (const auto& s : b.surfaces) {
            out << "surface " << to_string(s.semantics) << "\n";
            out << "outer\n";
            for (const auto& p : s.outer_ring) {
                out << "  " << p.x() << " " << p.y() << " " << p.z() << "\n";
            }
            for (const auto& inner : s.inner_rings) {
                out << "inner\n";
                for (const auto& p : inner) {
                    out << "  " << p.x() << " " << p.y() << " " << p.z() << "\n";
                }
            }
        }
    }
    if (!out) throw IoError("write failed for " + path);
}

}  // namespace lodloc
