#pragma once
#include <cstdint>
#include <string>
#include <vector>

namespace oopsim {

// One household-week observation. Column order of the CSV matches the
// field order here.
struct PanelRecord {
    std::int64_t household_id = 0;
    int year = 1;
    int week = 1;
    double spend_per_person = 0.0;
    int n_members = 1;
    int post_service = 0;
    int post_bill = 0;
    int shoppable_flag = 0;
    double true_oop_week = 0.0;
    double perceived_theta_mean = 0.0;

    double household_spend() const { return spend_per_person * n_members; }
};

// One claim (one per household-week with positive spending).
struct ClaimEvent {
    std::int64_t household_id = 0;
    int week = 0;
    double amount = 0.0;    // billed dollars m
    double true_oop = 0.0;  // realized OOP cost of the claim
    int bill_week = 0;
};

struct Panel {
    std::vector<PanelRecord> records;
    std::vector<ClaimEvent> claims;  // empty when loaded from CSV
    std::uint64_t shock_checksum = 0;
};

void write_panel_csv(const Panel& panel, const std::string& path);
Panel read_panel_csv(const std::string& path);

}  // namespace oopsim
