package com.acme.view;

import java.io.StringWriter;
import org.apache.velocity.VelocityContext;
import org.apache.velocity.app.VelocityEngine;

public class PageRenderer {

    private final VelocityEngine engine = new VelocityEngine();

    public String render(String template, String title) {
        VelocityContext context = new VelocityContext();
        context.put("title", title);
        StringWriter writer = new StringWriter();
        engine.evaluate(context, writer, "page", template);
        return writer.toString();
    }

    public String renderUpper(String template) {
        VelocityContext context = new VelocityContext();
        StringWriter writer = new StringWriter();
        engine.evaluate(context, writer, "page", template.toUpperCase());
        return writer.toString();
    }
}
