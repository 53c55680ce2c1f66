#include "oopsim/panel.hpp"

#include <fstream>

#include "oopsim/csv.hpp"
#include "oopsim/errors.hpp"

namespace oopsim {

void write_panel_csv(const Panel& panel, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write file: " + path);
    out << "household_id,year,week,spend_per_person,n_members,post_service,"
           "post_bill,shoppable_flag,true_oop_week,perceived_theta_mean\n";
    for (const auto& r : panel.records) {
        out << r.household_id << ',' << r.year << ',' << r.week << ','
            << money_str(r.spend_per_person) << ',' << r.n_members << ',' << r.post_service
            << ',' << r.post_bill << ',' << r.shoppable_flag << ',' << money_str(r.true_oop_week)
            << ',' << money_str(r.perceived_theta_mean) << '\n';
    }
}

Panel read_panel_csv(const std::string& path) {
    CsvTable t = read_csv(path);
    int c_hh = t.require_column("household_id", path);
    int c_year = t.require_column("year", path);
    int c_week = t.require_column("week", path);
    int c_spend = t.require_column("spend_per_person", path);
    int c_n = t.require_column("n_members", path);
    int c_ps = t.require_column("post_service", path);
    int c_pb = t.require_column("post_bill", path);
    int c_flag = t.require_column("shoppable_flag", path);
    int c_oop = t.require_column("true_oop_week", path);
    int c_theta = t.require_column("perceived_theta_mean", path);

    Panel panel;
    panel.records.reserve(t.rows.size());
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const auto& row = t.rows[r];
        std::string ctx = path + " row " + std::to_string(r + 2);
        PanelRecord rec;
        rec.household_id = to_int(row[c_hh], ctx);
        rec.year = static_cast<int>(to_int(row[c_year], ctx));
        rec.week = static_cast<int>(to_int(row[c_week], ctx));
        rec.spend_per_person = to_double(row[c_spend], ctx);
        rec.n_members = static_cast<int>(to_int(row[c_n], ctx));
        rec.post_service = static_cast<int>(to_int(row[c_ps], ctx));
        rec.post_bill = static_cast<int>(to_int(row[c_pb], ctx));
        rec.shoppable_flag = static_cast<int>(to_int(row[c_flag], ctx));
        rec.true_oop_week = to_double(row[c_oop], ctx);
        rec.perceived_theta_mean = to_double(row[c_theta], ctx);
        if (rec.post_bill == 1 && rec.post_service == 0)
            throw IoError(ctx + ": post_bill=1 requires post_service=1");
        panel.records.push_back(rec);
    }
    return panel;
}

}  // namespace oopsim
