// All generation prompt wording lives here so it can be edited in one
// place. The baseline prompt text is the fixed product prompt; everything
// else is template interpretation that users may tune.

#include "anaquest/generation.hpp"

#include "prompt_templates.hpp"

namespace anaquest::gen {

const std::string& default_course_phrase() {
    static const std::string phrase = "a graduate level HCI course";
    return phrase;
}

namespace templates {

const char* const kAnaquestFraming =
    "You are helping an instructor write a final exam. Generate exactly three "
    "correct assertions and three incorrect assertions, each about 30 words, for "
    "a multiple-choice question asking \"Which of the following are correct about "
    "[topic]?\". The assertions must effectively assess whether a student has "
    "achieved the given learning objective.";

const char* const kMisunderstandingInstruction =
    "The incorrect assertions must reflect misunderstandings evidenced in the "
    "student responses above.";

const char* const kOutputFormat =
    "Respond in exactly this format, with no other text:\n"
    "Correct:\n"
    "1) <assertion>\n"
    "2) <assertion>\n"
    "3) <assertion>\n"
    "Incorrect:\n"
    "1) <assertion>\n"
    "2) <assertion>\n"
    "3) <assertion>";

}  // namespace templates

// Synthetic defaults, meant to be replaced with course-specific examples
// via the few_shot config. Topics and texts are generic placeholders.
const std::vector<FewShotExample>& default_few_shot() {
    static const std::vector<FewShotExample> examples = {
        {"heuristic evaluation",
         "Explain how heuristic evaluation is conducted and what it can and cannot find.",
         {"Heuristic evaluation has several expert reviewers independently inspect an "
          "interface against a checklist of usability principles and then aggregate the "
          "problems they found into a severity-ranked list.",
          "Because evaluators rely on general principles rather than observed use, "
          "heuristic evaluation can be run early on mockups before any working system or "
          "recruited users are available.",
          "Adding evaluators increases coverage of usability problems but with "
          "diminishing returns, which is why a small panel of three to five reviewers is "
          "the usual recommendation."},
         {"Heuristic evaluation requires a statistically representative sample of end "
          "users so that the severity ratings generalize to the whole user population.",
          "A single expert is sufficient for a complete heuristic evaluation because the "
          "heuristics themselves guarantee that every class of problem is examined.",
          "Problems found by heuristic evaluation are always real usability failures, so "
          "no follow-up testing with users is ever needed to confirm them."}},
        {"think-aloud usability testing",
         "Describe how to run a think-aloud study and interpret what participants say.",
         {"In a think-aloud session the participant verbalizes their reasoning while "
          "performing realistic tasks, giving the observer a running trace of "
          "expectations, confusion, and recovery strategies.",
          "Facilitators should prompt with neutral reminders such as asking what the "
          "participant is thinking, rather than explaining the interface or steering "
          "them toward the intended path.",
          "Verbalizing can slow task performance, so timing measures from think-aloud "
          "sessions should be treated as indicative rather than as clean performance "
          "benchmarks."},
         {"Think-aloud testing is primarily a method for measuring task completion time "
          "precisely, since speaking does not affect how quickly people work.",
          "If a participant struggles, the facilitator should immediately demonstrate "
          "the correct procedure so the session can continue gathering useful data.",
          "Think-aloud results are only valid with at least thirty participants because "
          "fewer sessions cannot reveal any usability problems."}},
        {"Fitts's law",
         "Apply Fitts's law to predict and improve pointing performance in interfaces.",
         {"Fitts's law predicts that the time to acquire a target grows with the "
          "distance to the target and shrinks as the target gets wider along the axis "
          "of motion.",
          "Screen edges and corners act as effectively infinite-depth targets for a "
          "mouse pointer, which is why docks, menu bars, and corner controls are fast "
          "to hit.",
          "Making a frequently used button larger or placing it closer to where the "
          "pointer usually rests are both interventions that Fitts's law predicts will "
          "reduce selection time."},
         {"Fitts's law states that selection time depends only on how far the pointer "
          "must travel, so resizing a target has no effect on how quickly users hit it.",
          "Fitts's law applies to keyboard shortcuts as well, predicting the time to "
          "press a key combination from the distance between the keys involved.",
          "According to Fitts's law, placing controls at the screen edge slows users "
          "down because the pointer must stop exactly on the boundary."}},
        {"paper prototyping",
         "Justify when paper prototypes are preferable to high-fidelity prototypes.",
         {"Paper prototypes let a team test interaction flow within hours of sketching, "
          "because a facilitator can play the computer by swapping sketched screens in "
          "response to user actions.",
          "Users tend to give more fundamental, structural feedback on rough sketches, "
          "since polished visuals invite comments about colors and alignment instead of "
          "about the task flow.",
          "Because paper prototypes are cheap to discard, teams can explore several "
          "competing designs in parallel before committing engineering effort to any of "
          "them."},
         {"Paper prototypes are mainly useful for evaluating visual polish such as "
          "typography and color palettes, which read the same on paper as on screen.",
          "A paper prototype study requires a fully specified backend so that the "
          "facilitator can reproduce exact system latency during the session.",
          "Feedback from paper prototypes is unreliable by definition, so findings must "
          "always be discarded once a high-fidelity prototype exists."}},
        {"A/B testing",
         "Design an A/B test and reason about what its results do and do not show.",
         {"An A/B test randomly assigns comparable users to variants so that observed "
          "differences in a predefined metric can be attributed to the design change "
          "rather than to the audience.",
          "Sample size and test duration should be decided before launch, because "
          "stopping as soon as a difference looks significant inflates the false "
          "positive rate.",
          "A/B tests measure what users do at scale but not why they do it, so "
          "surprising results are usually followed up with qualitative methods."},
         {"A/B testing explains the reasons behind user behavior directly, making "
          "interviews and usability sessions redundant once traffic is high enough.",
          "It is best practice to keep checking an A/B test daily and stop it the first "
          "time the difference between variants reaches significance.",
          "Assigning users to variants by signup date instead of randomly is equivalent "
          "to randomization as long as both groups end up the same size."}},
    };
    return examples;
}

}  // namespace anaquest::gen
