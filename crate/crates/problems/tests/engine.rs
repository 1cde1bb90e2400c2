use std::collections::BTreeSet;

use cq_problems::grade::grade_question;
use cq_problems::instance::instance_id;
use cq_problems::*;

fn template(json: serde_json::Value) -> ProblemTemplate {
    let t: ProblemTemplate = serde_json::from_value(json).unwrap();
    t.validate(Taxonomy::shipped(), Tables::shipped()).unwrap();
    t
}

fn divider() -> ProblemTemplate {
    template(serde_json::json!({
        "id": "appliances.test.divider", "campaign": "appliances", "level": 1,
        "title": "Divider", "narrative": "A {V} V supply feeds {R1} Ω and {R2} Ω.",
        "params": [
            {"name": "V", "kind": "choice", "values": ["12", "24"]},
            {"name": "R1", "kind": "uniform", "lo": 10, "hi": 100},
            {"name": "R2", "kind": "uniform", "lo": 10, "hi": 100}
        ],
        "netlist": "V1 1 0 DC {V} RINT=0\nR1 1 2 {R1}\nR2 2 0 {R2}\n",
        "questions": [
            {"kind": "NUMERIC", "prompt": "V(2)", "answer": {"op": "voltage", "a": "2", "b": "0"}},
            {"kind": "DIAGNOSIS", "prompt": "Which is open?", "fault": {"kind": "OPEN", "element": "R1"}}
        ],
        "difficulty": 2, "xp": 20, "coins": 2,
        "outcomes": [{"bloom": "apply", "topic": "voltage-divider"}]
    }))
}

#[test]
fn same_seed_is_byte_identical() {
    for t in Library::shipped().templates() {
        for seed in [0, 1, u64::MAX] {
            let a = serde_json::to_string(&instantiate(t, seed).unwrap()).unwrap();
            let b = serde_json::to_string(&instantiate(t, seed).unwrap()).unwrap();
            assert_eq!(a, b, "{}", t.id);
        }
    }
}

#[test]
fn divider_answer_matches_closed_form() {
    let t = divider();
    for seed in 0..50 {
        let i = instantiate(&t, seed).unwrap();
        let p = |k: &str| i.params[k].parse::<f64>().unwrap();
        let v2 = p("V") * p("R2") / (p("R1") + p("R2"));
        let Expected::Numeric { value } = i.expected[0] else { panic!() };
        assert!((value - v2).abs() <= 1e-9 * v2);
        assert_eq!(i.instance_id, format!("{}:{:016x}", t.id, seed));
    }
}

#[test]
fn neighbouring_seeds_differ() {
    // Statistical check: adjacent seeds share a template, 1000 pairs in all.
    let lib = Library::shipped().templates();
    let mut differ = 0;
    for k in 0..1000u64 {
        let t = &lib[k as usize % lib.len()];
        let a = instantiate(t, 2 * k).unwrap();
        let b = instantiate(t, 2 * k + 1).unwrap();
        differ += usize::from(a.params != b.params);
    }
    assert!(differ >= 990, "{differ} of 1000 pairs differ");
}

#[test]
fn draws_are_diverse_per_template() {
    for t in Library::shipped().templates() {
        let distinct: BTreeSet<String> =
            (0..1000u64).map(|s| serde_json::to_string(&instantiate(t, s).unwrap().params).unwrap()).collect();
        assert!(distinct.len() >= 990, "{}: {} distinct draws", t.id, distinct.len());
    }
}

#[test]
fn resonant_loop_is_a_recipe_error() {
    let t = template(serde_json::json!({
        "id": "appliances.test.lc", "campaign": "appliances", "level": 3,
        "title": "LC", "narrative": "An LC tank.",
        "params": [{"name": "L", "kind": "choice", "values": ["1", "2"]}],
        "netlist": "V1 1 0 DC 1 RINT=0\nL1 1 0 {L}\nC1 1 0 1\n",
        "questions": [{"kind": "NUMERIC", "prompt": "I", "answer": {"op": "current", "element": "L1"}}],
        "difficulty": 1, "xp": 10, "coins": 1,
        "outcomes": [{"bloom": "apply", "topic": "ideal-elements"}]
    }));
    match instantiate(&t, 5) {
        Err(ProblemError::RecipeError { attempts, .. }) => assert_eq!(attempts, 1 + REDRAWS),
        other => panic!("{other:?}"),
    }
}

#[test]
fn expected_answers_solve_every_template() {
    for t in Library::shipped().templates() {
        for seed in 0..20 {
            let i = instantiate(t, seed).unwrap();
            let g = grade(&i, &expected_answers(&i)).unwrap();
            assert!(g.solved, "{} seed {seed}: {:?}", t.id, g.questions);
            assert_eq!((g.score, g.xp, g.coins), (1.0, t.xp, t.coins));
        }
    }
}

#[test]
fn three_point_oh_two_against_three() {
    let (given, expected, tol) = (3.02, 3.0, 0.01);
    // Oracle in integer hundredths: |302 - 300| * 100 <= 1 * 300.
    let oracle = (302i64 - 300).abs() * 100 <= 300;
    let g = grade_question(&Expected::Numeric { value: expected }, &Answer::Number(given), tol);
    assert_eq!(g.verdict == Verdict::Correct, oracle);
    assert!(oracle);
    let far = grade_question(&Expected::Numeric { value: expected }, &Answer::Number(3.04), tol);
    assert_eq!(far.verdict, Verdict::Wrong);
}

#[test]
fn diagnosis_partial_credit() {
    let t = divider();
    let i = instantiate(&t, 1).unwrap();
    let v = expected_answers(&i)[0].clone();
    let answers = |kind: &str, loc: &str| vec![v.clone(), Answer::Diagnosis { kind: kind.into(), location: loc.into() }];
    let wrong_place = grade(&i, &answers("OPEN", "R3")).unwrap();
    assert_eq!(wrong_place.questions[1].verdict, Verdict::Partial);
    assert_eq!(wrong_place.questions[1].score, 0.5);
    let wrong_kind = grade(&i, &answers("SHORT", "R1")).unwrap();
    assert_eq!(wrong_kind.questions[1].score, 0.0);
    assert!(!wrong_kind.solved);
    assert_eq!((wrong_kind.xp, wrong_kind.coins), (0, 0));
    assert!(grade(&i, &answers("open", "r1")).unwrap().solved);
}

#[test]
fn arity_is_checked() {
    let i = instantiate(&divider(), 1).unwrap();
    assert!(matches!(grade(&i, &[]), Err(ProblemError::ArityMismatch { expected: 2, given: 0 })));
}

#[test]
fn co2_of_one_hundred_kwh() {
    // Oracle: 0.3 kg/kWh is 3/10, so 100 kWh emit 100 * 3 / 10 kg.
    let oracle = f64::from(100 * 3) / 10.0;
    assert!((energy_to_co2(100.0, 0.3).unwrap() - oracle).abs() < 1e-12);
    assert_eq!(energy_to_co2(0.0, 0.7).unwrap(), 0.0);
    assert_eq!(energy_to_co2(55.0, 0.0).unwrap(), 0.0);
    assert!(matches!(energy_to_co2(-1.0, 0.3), Err(ProblemError::NegativeInput(_))));
}

#[test]
fn schematic_of_a_simple_loop() {
    let c = cq_circuit::netlist::parse_netlist("V1 1 0 DC 12\nR1 1 0 4\n").unwrap();
    let svg = render_circuit(&c);
    assert_eq!(svg.matches(r#"<g class="element""#).count(), 2);
    assert_eq!(svg.matches(r#"class="rail" data-node="0""#).count(), 1);
    assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
    assert_eq!(svg, render_circuit(&c));
}

#[test]
fn schematic_labels_every_element() {
    let mut text = String::from("V1 1 0 AC 230 0\n.AC 50\n");
    for k in 1..=29 {
        let line = match k % 3 {
            0 => format!("R{k} {} {} {}\n", k, k + 1, k),
            1 => format!("L{k} {} 0 0.{k}\n", k + 1),
            _ => format!("C{k} {} 0 {k}u\n", k + 1),
        };
        text.push_str(&line);
    }
    let c = cq_circuit::netlist::parse_netlist(&text).unwrap();
    assert_eq!(c.elements().len(), 30);
    let svg = render_circuit(&c);
    let names: Vec<&str> =
        text.lines().filter(|l| !l.starts_with('.')).filter_map(|l| l.split_whitespace().next()).collect();
    assert_eq!(names.len(), 30);
    for name in names {
        assert!(svg.contains(&format!(">{name} ")), "label for {name} missing");
    }
}

#[test]
fn shipped_instances_render() {
    for t in Library::shipped().templates() {
        let i = instantiate(t, 9).unwrap();
        let svg = render_schematic(&i).unwrap();
        assert_eq!(svg, render_schematic(&i).unwrap());
        assert!(svg.contains(r#"data-node="0""#), "{}", t.id);
    }
}

#[test]
fn filters() {
    let lib = Library::shipped();
    let all = filter_templates(lib, "appliances", 1, None).unwrap();
    assert!(!all.is_empty());
    assert!(all.iter().all(|t| t.level == 1 && t.campaign == "appliances"));
    assert!(all.windows(2).all(|w| w[0].id < w[1].id));
    let analyze = TagFilter { bloom: Some(Bloom::Analyze), topic: None };
    for campaign in CAMPAIGNS {
        for level in 1..=5 {
            let sub = filter_templates(lib, campaign, level, Some(&analyze)).unwrap();
            let full = filter_templates(lib, campaign, level, None).unwrap();
            assert!(sub.iter().all(|t| full.iter().any(|f| f.id == t.id)));
        }
    }
    assert!(matches!(filter_templates(lib, "moon", 1, None), Err(ProblemError::UnknownCampaign(_))));
    assert!(matches!(filter_templates(lib, "mars", 6, None), Err(ProblemError::UnknownLevel(6))));
}

#[test]
fn catalog_covers_taxonomy_and_levels() {
    let lib = Library::shipped();
    let tags: BTreeSet<&str> = lib.templates().iter().flat_map(|t| t.outcomes.iter().map(|o| o.topic.as_str())).collect();
    for topic in &Taxonomy::shipped().topics {
        assert!(tags.contains(topic.id.as_str()), "topic {} untagged", topic.id);
    }
    for campaign in CAMPAIGNS {
        for level in 1..=5u8 {
            let main = lib.templates().iter().filter(|t| t.campaign == campaign && t.level == level && !t.secondary).count();
            assert!(main >= 4, "{campaign} level {level}: {main} templates");
        }
    }
    assert!(lib.templates().len() >= 80);
}

#[test]
fn view_hides_answers() {
    let t = Library::shipped().templates().iter().find(|t| !t.reveal_circuit).unwrap();
    let i = instantiate(t, 2).unwrap();
    let v = serde_json::to_value(i.view()).unwrap();
    assert!(v.get("expected").is_none());
    assert!(v["netlist"].is_null());
    assert_eq!(instance_id(&t.id, 2), i.instance_id);
}
