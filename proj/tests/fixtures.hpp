#pragma once

// Frozen end-to-end fixtures shared by the unit and acceptance suites: two
// nine-candidate weighted-voting cases and one soft-aggregation case with
// per-candidate class distributions. Expected masses were computed by hand
// from the rows and are asserted to 1e-9.

#include <array>
#include <string>
#include <vector>

#include "ease/core.hpp"

namespace ease::test {

struct VoteRow {
    const char* explanation;
    const char* prediction;  // label id
    double score;
};

// Three-label NLI case: gold "neutral", plain majority voting lands on
// "entail", score-weighted voting recovers "neutral".
inline constexpr const char* kNliVotePremise =
    "A man is working on a computer while two people sit and talk in front.";
inline constexpr const char* kNliVoteHypothesis =
    "The two people sat and chatted for a bit while the IT guy removed the virus.";
inline constexpr const char* kNliVoteGold = "neutral";

inline const std::array<VoteRow, 9> kNliVoteRows = {{
    {"The two people cannot be sitting and talking in front while the IT guy removes the virus.",
     "contradict", 0.468},
    {"There is no proof that there is an IT Person removed the virus.", "neutral", 0.562},
    {"The two people were sitting and talking.", "entail", 0.369},
    {"There is no evidence that the man is an IT guy, or that he is removing a virus.", "neutral", 0.677},
    {"The two people could be talking and the IT guy could be removing the virus.", "entail", 0.488},
    {"But it's not given that the IT guy is removing a virus.", "neutral", 0.612},
    {"The man on the computer is the IT guy.", "entail", 0.468},
    {"The people sitting and talking are not related to the man working on the computer.", "contradict",
     0.447},
    {"The man sitting at the computer is an IT person and is removing the virus.", "entail", 0.455},
}};
// Hand sums of the score column by predicted label (entail, neutral, contradict).
inline constexpr double kNliVoteMassEntail = 1.780;
inline constexpr double kNliVoteMassNeutral = 1.851;
inline constexpr double kNliVoteMassContradict = 0.915;

// Binary QA case: gold "false"; weighted hard voting flips the majority.
inline constexpr const char* kQaVoteQuestion =
    "Is Hermione Granger eligible for the Order of the British Empire?";
inline constexpr const char* kQaVoteGold = "false";

inline const std::array<VoteRow, 9> kQaVoteRows = {{
    {"The Order of the British Empire is a British order of chivalry rewarding contributions to the arts "
     "and sciences, work with charitable and welfare organizations and public service outside the civil "
     "service.  Hermione Granger is a character in the Harry Potter series by J K.",
     "true", 0.426},
    {"The Order of the British Empire is a British Order of Chivalry. Hermione Granger is a fictional "
     "character living in a world of magic and wizards. The Order of the British Empire has never been "
     "awarded to a fictional character.",
     "false", 0.655},
    {"The Order of the British Empire was founded in 1917 by King George V. Hermione Granger is a British "
     "citizen  To be eligible for the Order of the British Empire, a person must have contributed to the "
     "arts, science, medicine, charity, industry or government.",
     "true", 0.489},
    {"Hermione Granger is a fictional character from the Harry Potter books, not a British citizen.",
     "false", 0.678},
    {"Hermione Granger is a fictional character in the Harry Potter books. The Order of the British Empire "
     "is a British award that can only be received by a British subject .",
     "false", 0.650},
    {"Hermione Granger is a fictional character in the Harry Potter series  Order of the British Empire "
     "honors people who have made a major contribution to the arts, science, medicine, charity, or "
     "industry.  Hermione Granger has contributed to the arts by authoring a book on the history of magic.",
     "true", 0.406},
    {"Hermione Granger is a British citizen  The Order of the British Empire is an order of chivalry.",
     "true", 0.452},
    {"The Order of the British Empire is a knighthood.  Hermione Granger is a Hogwarts student.", "true",
     0.406},
    {"Hermione Granger is a Hogwarts student and does not have British citizenship.", "false", 0.602},
}};
inline constexpr double kQaVoteMassTrue = 2.179;
inline constexpr double kQaVoteMassFalse = 2.585;

struct SoftRow {
    const char* explanation;
    const char* prediction;               // sampled token's label
    std::array<double, 3> probs;          // entail, neutral, contradict
};

// Soft-aggregation case: gold "contradict", majority voting says "neutral",
// summed distributions say "contradict". Row 4's sampled token disagrees
// with its own distribution argmax (the one inconsistent row of nine).
inline constexpr const char* kSoftPremise = "A Seattle firefighter standing in front of his truck.";
inline constexpr const char* kSoftHypothesis = "The man is standing in front of the ambulance.";
inline constexpr const char* kSoftGold = "contradict";

inline const std::array<SoftRow, 9> kSoftRows = {{
    {"The man is standing in front of the truck and the man is standing in front of the ambulance.",
     "neutral", {0.369, 0.419, 0.175}},
    {"An ambulance is different than a truck.", "contradict", {0.001, 0.042, 0.953}},
    {"The Seattle firefighter is standing in front of his truck.  The truck is not necessarily an "
     "ambulance.",
     "neutral", {0.002, 0.880, 0.105}},
    {"Ambulances are not fire trucks.", "neutral", {0.001, 0.372, 0.614}},
    {"The guy is standing in front of a truck.", "entail", {0.391, 0.194, 0.378}},
    {"The man is standing in front of the truck.", "entail", {0.418, 0.198, 0.364}},
    {"Firetrucks and ambulances are different.", "contradict", {0.000, 0.004, 0.995}},
    {"A Seattle firefighter is a man.", "entail", {0.928, 0.036, 0.027}},
    {"The firefighter isn't necessarily an ambulance driver.", "neutral", {0.001, 0.552, 0.456}},
}};
// Hand sums of the distribution columns.
inline constexpr double kSoftMassEntail = 2.111;
inline constexpr double kSoftMassNeutral = 2.697;
inline constexpr double kSoftMassContradict = 4.067;
inline constexpr double kSoftInconsistency = 1.0 / 9.0;

// Candidates carrying the soft-case rows, built on a given NLI task spec.
inline std::vector<Candidate> soft_case_candidates(const TaskSpec& task) {
    std::vector<Candidate> out;
    for (const auto& row : kSoftRows) {
        Candidate c;
        c.explanation = row.explanation;
        c.prediction = row.prediction;
        c.parse_ok = true;
        c.raw_text = std::string(" ") + row.explanation + "\nAnswer: " + task.verbalizer(row.prediction);
        c.distribution =
            LabelDistribution::from_rounded(task.labels, {row.probs[0], row.probs[1], row.probs[2]});
        out.push_back(std::move(c));
    }
    return out;
}

}  // namespace ease::test
