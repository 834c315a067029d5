use std::collections::BTreeSet;

use proptest::prelude::*;

use super::*;
use crate::builtin;

fn builtins() -> Registry {
    let mut r = Registry::new();
    builtin::register_builtins(&mut r).unwrap();
    r
}

fn names(list: &[&str]) -> Vec<String> {
    list.iter().map(|s| s.to_string()).collect()
}

#[test]
fn builtin_trio_validates_from_nothing() {
    let r = builtins();
    let v = validate_system(
        &r,
        &names(&["tokenizer", "sentence_splitter", "pos_tagger"]),
        &BTreeSet::new(),
    )
    .unwrap();
    assert!(v.is_empty(), "{v:?}");
}

#[test]
fn tagger_alone_misses_tokens() {
    let r = builtins();
    let v = validate_system(&r, &names(&["pos_tagger"]), &BTreeSet::new()).unwrap();
    assert!(v.contains(&ConditionViolation {
        component: "pos_tagger".into(),
        condition: Condition::exists("token"),
    }));
}

#[test]
fn empty_system_is_valid() {
    assert!(validate_system(&builtins(), &[], &BTreeSet::new())
        .unwrap()
        .is_empty());
}

#[test]
fn unknown_component() {
    assert_eq!(
        validate_system(&builtins(), &names(&["parser"]), &BTreeSet::new()),
        Err(RegistryError::UnknownComponent("parser".into()))
    );
}

#[test]
fn orders_builtin_trio() {
    let r = builtins();
    let order = order_components(
        &r,
        ["pos_tagger", "tokenizer", "sentence_splitter"],
        &BTreeSet::new(),
    )
    .unwrap();
    assert_eq!(order, names(&["tokenizer", "sentence_splitter", "pos_tagger"]));
    assert!(validate_system(&r, &order, &BTreeSet::new()).unwrap().is_empty());
}

#[test]
fn tagger_alone_has_no_order() {
    match order_components(&builtins(), ["pos_tagger"], &BTreeSet::new()) {
        Err(OrderError::NoValidOrder { missing, unplaced }) => {
            assert!(missing.contains(&Condition::exists("token")));
            assert_eq!(unplaced, names(&["pos_tagger"]));
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn singleton_order() {
    assert_eq!(
        order_components(&builtins(), ["tokenizer"], &BTreeSet::new()).unwrap(),
        names(&["tokenizer"])
    );
}

#[test]
fn attribute_preconditions_need_exact_attribute() {
    let mut r = Registry::new();
    r.register(ComponentDescriptor::native("tags_pos").post(Condition::with_attribute("token", "pos")))
        .unwrap();
    r.register(ComponentDescriptor::native("tags_lemma").post(Condition::with_attribute("token", "lemma")))
        .unwrap();
    r.register(ComponentDescriptor::native("makes_tokens").post(Condition::exists("token")))
        .unwrap();
    r.register(ComponentDescriptor::native("needs_pos").pre(Condition::with_attribute("token", "pos")))
        .unwrap();
    let empty = BTreeSet::new();
    assert!(validate_system(&r, &names(&["tags_pos", "needs_pos"]), &empty).unwrap().is_empty());
    assert_eq!(validate_system(&r, &names(&["tags_lemma", "needs_pos"]), &empty).unwrap().len(), 1);
    assert_eq!(validate_system(&r, &names(&["makes_tokens", "needs_pos"]), &empty).unwrap().len(), 1);
    // (token,pos) implies (token,·)
    let initial: BTreeSet<_> = [Condition::with_attribute("token", "pos")].into();
    let v = validate_system(&builtins(), &names(&["sentence_splitter"]), &initial).unwrap();
    assert!(v.is_empty());
}

// ---- randomized descriptor sets ----

const TYPES: [&str; 4] = ["a", "b", "c", "d"];

fn condition() -> impl Strategy<Value = Condition> {
    (0..TYPES.len(), prop::option::of(Just("x"))).prop_map(|(t, a)| Condition {
        annotation_type: TYPES[t].into(),
        attribute: a.map(str::to_owned),
    })
}

fn registry_strategy() -> impl Strategy<Value = Registry> {
    prop::collection::vec(
        (
            prop::collection::btree_set(condition(), 0..3),
            prop::collection::btree_set(condition(), 0..3),
        ),
        1..6,
    )
    .prop_map(|specs| {
        let mut r = Registry::new();
        for (i, (pre, post)) in specs.into_iter().enumerate() {
            let post = post.difference(&pre).cloned().collect();
            let mut d = ComponentDescriptor::native(format!("c{i}"));
            d.preconditions = pre;
            d.postconditions = post;
            r.register(d).unwrap();
        }
        r
    })
}

fn permutations(items: &[String]) -> Vec<Vec<String>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let head = rest.remove(i);
        for mut p in permutations(&rest) {
            p.insert(0, head.clone());
            out.push(p);
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn ordering_agrees_with_permutation_search(
        r in registry_strategy(),
        initial in prop::collection::btree_set(condition(), 0..2),
    ) {
        let all: Vec<String> = r.names().map(str::to_owned).collect();
        let valid: Vec<Vec<String>> = permutations(&all)
            .into_iter()
            .filter(|p| validate_system(&r, p, &initial).unwrap().is_empty())
            .collect();
        let ordered = order_components(&r, all.iter().map(String::as_str), &initial);
        match ordered {
            Ok(order) => {
                prop_assert!(valid.contains(&order));
                let again = order_components(&r, all.iter().map(String::as_str), &initial).unwrap();
                prop_assert_eq!(order, again);
            }
            Err(OrderError::NoValidOrder { .. }) => prop_assert!(valid.is_empty()),
            Err(e) => prop_assert!(false, "unexpected {}", e),
        }
    }

    #[test]
    fn more_initial_conditions_never_invalidate(
        r in registry_strategy(),
        initial in prop::collection::btree_set(condition(), 0..3),
        extra in prop::collection::btree_set(condition(), 0..3),
    ) {
        let all: Vec<String> = r.names().map(str::to_owned).collect();
        for p in permutations(&all) {
            if validate_system(&r, &p, &initial).unwrap().is_empty() {
                let wider: BTreeSet<_> = initial.union(&extra).cloned().collect();
                prop_assert!(validate_system(&r, &p, &wider).unwrap().is_empty());
            }
        }
    }
}
