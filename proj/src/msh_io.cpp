#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "fsi/mesh.hpp"

namespace fsi {

namespace {

const char* marker_name(BMark m) {
    switch (m) {
        case BMark::outer_wall: return "outer_wall";
        case BMark::inlet: return "inlet";
        case BMark::outlet: return "outlet";
        case BMark::pillar: return "pillar";
        case BMark::interface_edge: return "interface";
        default: return "";
    }
}

struct LineReader {
    std::istream& in;
    int line_no = 0;
    std::string line;
    bool next() {
        while (std::getline(in, line)) {
            ++line_no;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (!line.empty()) return true;
        }
        return false;
    }
    [[noreturn]] void fail(const std::string& msg) const {
        throw ParseError("line " + std::to_string(line_no) + ": " + msg);
    }
};

} // namespace

void write_msh(const Mesh& mesh, std::ostream& out) {
    out << "$MeshFormat\n2.2 0 8\n$EndMeshFormat\n";

    // Physical groups actually present.
    std::map<std::string, int> phys1; // 1D
    bool have_solid = mesh.has_solid();
    for (int e = 0; e < mesh.n_edges(); ++e) {
        const char* nm = marker_name(mesh.edge_marker[e]);
        if (nm[0] != '\0' && !phys1.count(nm)) phys1[nm] = 0;
    }
    int tag = 1;
    std::map<std::string, int> phys;
    phys["fluid"] = tag++;
    if (have_solid) phys["solid"] = tag++;
    for (auto& [nm, t] : phys1) t = tag++;

    out << "$PhysicalNames\n" << (phys.size() + phys1.size()) << "\n";
    out << "2 " << phys["fluid"] << " \"fluid\"\n";
    if (have_solid) out << "2 " << phys["solid"] << " \"solid\"\n";
    for (auto& [nm, t] : phys1) out << "1 " << t << " \"" << nm << "\"\n";
    out << "$EndPhysicalNames\n";

    out << "$Nodes\n" << mesh.n_nodes() << "\n";
    char buf[128];
    for (int i = 0; i < mesh.n_nodes(); ++i) {
        std::snprintf(buf, sizeof buf, "%d %.17g %.17g 0\n", i + 1, mesh.nodes[i].x,
                      mesh.nodes[i].y);
        out << buf;
    }
    out << "$EndNodes\n";

    int n_lines = 0;
    for (int e = 0; e < mesh.n_edges(); ++e)
        if (mesh.edge_marker[e] != BMark::none) ++n_lines;
    out << "$Elements\n" << (mesh.n_tris() + n_lines) << "\n";
    int id = 1;
    for (int e = 0; e < mesh.n_edges(); ++e) {
        if (mesh.edge_marker[e] == BMark::none) continue;
        const Mesh::Edge& ed = mesh.edges[e];
        out << id++ << " 8 2 " << phys1[marker_name(mesh.edge_marker[e])] << " 0 " << ed.a + 1
            << " " << ed.b + 1 << " " << ed.mid + 1 << "\n";
    }
    for (int t = 0; t < mesh.n_tris(); ++t) {
        const Mesh::Tri& tr = mesh.tris[t];
        int p = mesh.region[t] == Region::solid ? phys["solid"] : phys["fluid"];
        out << id++ << " 9 2 " << p << " 0 " << tr.v[0] + 1 << " " << tr.v[1] + 1 << " "
            << tr.v[2] + 1 << " " << tr.mid[0] + 1 << " " << tr.mid[1] + 1 << " "
            << tr.mid[2] + 1 << "\n";
    }
    out << "$EndElements\n";
}

void write_msh_file(const Mesh& mesh, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw IoError("cannot open " + path + " for writing");
    write_msh(mesh, f);
}

Mesh read_msh(std::istream& in) {
    LineReader lr{in};
    std::map<int, std::string> phys_names;
    std::map<int, Vec2> raw_nodes;

    struct RawElem {
        int type;
        int phys;
        std::vector<int> nodes;
    };
    std::vector<RawElem> elems;

    while (lr.next()) {
        if (lr.line == "$MeshFormat") {
            if (!lr.next()) lr.fail("truncated $MeshFormat");
            std::istringstream is(lr.line);
            double version;
            is >> version;
            if (!is || std::abs(version - 2.2) > 1e-9) lr.fail("unsupported MSH version");
            if (!lr.next() || lr.line != "$EndMeshFormat") lr.fail("missing $EndMeshFormat");
        } else if (lr.line == "$PhysicalNames") {
            if (!lr.next()) lr.fail("truncated $PhysicalNames");
            int n = std::stoi(lr.line);
            for (int i = 0; i < n; ++i) {
                if (!lr.next()) lr.fail("truncated physical name list");
                std::istringstream is(lr.line);
                int dim, tag;
                std::string name;
                is >> dim >> tag;
                std::getline(is, name);
                auto q0 = name.find('"');
                auto q1 = name.rfind('"');
                if (q0 == std::string::npos || q1 <= q0) lr.fail("malformed physical name");
                phys_names[tag] = name.substr(q0 + 1, q1 - q0 - 1);
            }
            if (!lr.next() || lr.line != "$EndPhysicalNames") lr.fail("missing $EndPhysicalNames");
        } else if (lr.line == "$Nodes") {
            if (!lr.next()) lr.fail("truncated $Nodes");
            int n = std::stoi(lr.line);
            for (int i = 0; i < n; ++i) {
                if (!lr.next()) lr.fail("truncated node list");
                std::istringstream is(lr.line);
                int id;
                double x, y, z;
                is >> id >> x >> y >> z;
                if (!is) lr.fail("malformed node");
                raw_nodes[id] = {x, y};
            }
            if (!lr.next() || lr.line != "$EndNodes") lr.fail("missing $EndNodes");
        } else if (lr.line == "$Elements") {
            if (!lr.next()) lr.fail("truncated $Elements");
            int n = std::stoi(lr.line);
            for (int i = 0; i < n; ++i) {
                if (!lr.next()) lr.fail("truncated element list");
                std::istringstream is(lr.line);
                int id, type, ntags;
                is >> id >> type >> ntags;
                if (!is) lr.fail("malformed element");
                std::vector<int> tags(ntags);
                for (int& t : tags) is >> t;
                int nn;
                switch (type) {
                    case 1: nn = 2; break;
                    case 2: nn = 3; break;
                    case 8: nn = 3; break;
                    case 9: nn = 6; break;
                    default: lr.fail("unsupported element type " + std::to_string(type));
                }
                RawElem e;
                e.type = type;
                e.phys = ntags > 0 ? tags[0] : 0;
                e.nodes.resize(nn);
                for (int& v : e.nodes) is >> v;
                if (!is) lr.fail("element node list too short");
                elems.push_back(std::move(e));
            }
            if (!lr.next() || lr.line != "$EndElements") lr.fail("missing $EndElements");
        } else if (!lr.line.empty() && lr.line[0] == '$') {
            // Skip unknown sections.
            std::string end = "$End" + lr.line.substr(1);
            while (lr.next() && lr.line != end) {}
        }
    }

    static const std::map<std::string, BMark> known_1d = {
        {"outer_wall", BMark::outer_wall}, {"inlet", BMark::inlet},
        {"outlet", BMark::outlet},         {"pillar", BMark::pillar},
        {"interface", BMark::interface_edge}};
    for (auto& [tag, name] : phys_names) {
        if (name != "fluid" && name != "solid" && !known_1d.count(name))
            throw ParseError("unrecognized physical name \"" + name + "\"");
    }
    bool has_fluid = false;
    for (auto& [tag, name] : phys_names) has_fluid |= (name == "fluid");
    if (!has_fluid) throw MissingGroup("no \"fluid\" physical group");

    // Vertex ids are the corners of the triangles; midpoints stay separate.
    std::map<int, int> vmap;
    Mesh m;
    auto vertex_id = [&](int raw) {
        auto it = vmap.find(raw);
        if (it != vmap.end()) return it->second;
        auto nit = raw_nodes.find(raw);
        if (nit == raw_nodes.end()) throw ParseError("element references unknown node");
        int id = static_cast<int>(m.nodes.size());
        vmap[raw] = id;
        m.nodes.push_back(nit->second);
        return id;
    };

    struct TriExtra { std::array<int, 3> raw_mid; };
    std::vector<TriExtra> extra;
    for (const RawElem& e : elems) {
        if (e.type != 2 && e.type != 9) continue;
        auto pit = phys_names.find(e.phys);
        Region reg = Region::fluid;
        if (pit != phys_names.end() && pit->second == "solid") reg = Region::solid;
        Mesh::Tri tr;
        tr.v = {vertex_id(e.nodes[0]), vertex_id(e.nodes[1]), vertex_id(e.nodes[2])};
        tr.mid = {-1, -1, -1};
        m.tris.push_back(tr);
        m.region.push_back(reg);
        extra.push_back({e.type == 9 ? std::array<int, 3>{e.nodes[3], e.nodes[4], e.nodes[5]}
                                     : std::array<int, 3>{-1, -1, -1}});
    }
    if (m.tris.empty()) throw ParseError("no triangles in file");
    m.n_vertices = static_cast<int>(m.nodes.size());
    m.finalize_connectivity();

    // Restore stored midpoint coordinates (curved geometry).
    for (int t = 0; t < m.n_tris(); ++t) {
        if (extra[t].raw_mid[0] < 0) continue;
        for (int k = 0; k < 3; ++k) {
            auto nit = raw_nodes.find(extra[t].raw_mid[k]);
            if (nit == raw_nodes.end()) throw ParseError("triangle references unknown midpoint");
            m.nodes[m.tris[t].mid[k]] = nit->second;
        }
    }

    // Boundary markers from line elements.
    std::map<std::pair<int, int>, int> edge_of;
    for (int e = 0; e < m.n_edges(); ++e)
        edge_of[{m.edges[e].a, m.edges[e].b}] = e;
    for (const RawElem& e : elems) {
        if (e.type != 1 && e.type != 8) continue;
        auto pit = phys_names.find(e.phys);
        if (pit == phys_names.end()) continue;
        auto mit = known_1d.find(pit->second);
        if (mit == known_1d.end()) continue;
        auto v0 = vmap.find(e.nodes[0]);
        auto v1 = vmap.find(e.nodes[1]);
        if (v0 == vmap.end() || v1 == vmap.end())
            throw ParseError("line element references node not used by any triangle");
        auto eit = edge_of.find(std::minmax(v0->second, v1->second));
        if (eit == edge_of.end()) throw ParseError("line element does not match a mesh edge");
        m.edge_marker[eit->second] = mit->second;
    }

    m.refresh_grid();
    try {
        m.validate();
    } catch (const FsiError& err) {
        throw ParseError(std::string("mesh invariants violated: ") + err.what());
    }
    return m;
}

Mesh read_msh_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open " + path);
    return read_msh(f);
}

} // namespace fsi
